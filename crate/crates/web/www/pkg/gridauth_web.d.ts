/* tslint:disable */
/* eslint-disable */

/**
 * Key-recovery rate against independent per-bit flip probability 0..20%.
 */
export function fuzzy_sweep(k: number, rho: number, trials: number, seed: number): string;

/**
 * One login handshake in a seeded world. `tamper` names a field of
 * `M_A1`/`M_A2` whose `bit` the adversary flips in flight, or is empty.
 */
export function run_handshake(curve: string, seed: number, delta_t: number, latency: number, tamper: string, bit: number): string;

/**
 * All affine points of the 23-element toy curve, the generator's cycle, and k·G.
 */
export function toy_curve(k: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly fuzzy_sweep: (a: number, b: number, c: number, d: number) => [number, number];
    readonly run_handshake: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number];
    readonly toy_curve: (a: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
