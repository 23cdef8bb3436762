/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_coupling_free: (a: number, b: number) => void;
export const coupling_current: (a: number) => [number, number, number, number];
export const coupling_new: (a: number, b: number, c: bigint, d: number, e: number) => [number, number, number];
export const coupling_relaxationTime: (a: number) => number;
export const coupling_step: (a: number, b: number) => [number, number, number, number];
export const mixing: (a: number, b: number, c: bigint, d: number, e: number, f: number) => [number, number, number, number];
export const spectrum: (a: number, b: number, c: bigint, d: number, e: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
