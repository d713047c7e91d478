/* tslint:disable */
/* eslint-disable */

export function compactionCurve(data: Float64Array, rows: number, cols: number, points: number): Float64Array;

export function energyHistogram(data: Float64Array, rows: number, cols: number, bins: number): Float64Array;

export function keepCounts(rows: number, cols: number, r: number): Uint32Array;

export function penaltyMask(rows: number, cols: number, gamma: number): Float64Array;

export function resizeWeights(data: Float64Array, rows: number, cols: number, r: number, out_rows: number, out_cols: number): Float64Array;

export function sampleWeights(rows: number, cols: number, seed: number, noise: number): Float64Array;

export function spectrumLogMagnitude(data: Float64Array, rows: number, cols: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly compactionCurve: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly energyHistogram: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly keepCounts: (a: number, b: number, c: number) => [number, number, number, number];
    readonly penaltyMask: (a: number, b: number, c: number) => [number, number, number, number];
    readonly resizeWeights: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
    readonly sampleWeights: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly spectrumLogMagnitude: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
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
