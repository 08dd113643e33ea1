/* tslint:disable */
/* eslint-disable */

/**
 * Bands along Γ→X at N=4 for a preset and amplitude.
 */
export function bands(preset: string, amplitude: number, samples: number, window: number): string;

/**
 * Relative residual of the main factorization identity for one random
 * state, for each `N` in `ns`.
 */
export function eq7_residuals(preset: string, amplitude: number, ns: Uint32Array, seed: bigint): string;

/**
 * `τ·‖R₀‖` along `k = (k₁ + iτ, 0, 0)` on a 64³ mode set.
 */
export function r0_decay(k1: number, shift: number, taus: Float64Array): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly bands: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly eq7_residuals: (a: number, b: number, c: number, d: number, e: number, f: bigint) => [number, number, number, number];
    readonly r0_decay: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
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
