/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const compactionCurve: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const energyHistogram: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const keepCounts: (a: number, b: number, c: number) => [number, number, number, number];
export const penaltyMask: (a: number, b: number, c: number) => [number, number, number, number];
export const resizeWeights: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
export const sampleWeights: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const spectrumLogMagnitude: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
