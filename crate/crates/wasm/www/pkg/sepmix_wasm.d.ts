/* tslint:disable */
/* eslint-disable */

/**
 * Maximal and minimal paths driven by one clock field.
 */
export class Coupling {
    free(): void;
    [Symbol.dispose](): void;
    current(): string;
    constructor(kind: string, seed: bigint, n: number, k: number);
    relaxationTime(): number;
    step(units: number): string;
}

export function mixing(kind: string, seed: bigint, n: number, k: number, eps: number): string;

export function spectrum(kind: string, seed: bigint, n: number, count: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_coupling_free: (a: number, b: number) => void;
    readonly coupling_current: (a: number) => [number, number, number, number];
    readonly coupling_new: (a: number, b: number, c: bigint, d: number, e: number) => [number, number, number];
    readonly coupling_relaxationTime: (a: number) => number;
    readonly coupling_step: (a: number, b: number) => [number, number, number, number];
    readonly mixing: (a: number, b: number, c: bigint, d: number, e: number, f: number) => [number, number, number, number];
    readonly spectrum: (a: number, b: number, c: bigint, d: number, e: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
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
