/* tslint:disable */
/* eslint-disable */

/**
 * A trained model together with the synthetic workload it was trained on.
 */
export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Runs the hardware model on one E-PTI vector.
     */
    evaluate(epti: Float64Array): string;
    /**
     * Generates a phased workload and trains a suite on 10% of it.
     */
    constructor(seed: number, phases: number, phase_length: number, traces: number);
    strip(trace: number): string;
    summary(): string;
}

export function selectReference(max_candidates: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly demo_evaluate: (a: number, b: number, c: number) => [number, number, number, number];
    readonly demo_new: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly demo_strip: (a: number, b: number) => [number, number, number, number];
    readonly demo_summary: (a: number) => [number, number];
    readonly selectReference: (a: number) => [number, number, number, number];
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
