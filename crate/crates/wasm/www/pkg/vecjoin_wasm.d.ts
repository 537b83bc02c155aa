/* tslint:disable */
/* eslint-disable */

/**
 * Cost estimates of each formulation for square joins up to `max_rows`.
 */
export function cost_curves(max_rows: number, points: number, dim: number, budget_bytes: number, model_ns: number, tensor_efficiency: number): string;

/**
 * Similarity matrix, matches and tiles for two newline-separated token lists.
 */
export function similarity_heatmap(left: string, right: string, seed: number, dim: number, theta: number, budget_bytes: number): string;

/**
 * Block sizes and tile layout for a join of the given shape.
 */
export function tile_plan(left_rows: number, right_rows: number, dim: number, budget_bytes: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly cost_curves: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number];
    readonly similarity_heatmap: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number];
    readonly tile_plan: (a: number, b: number, c: number, d: number) => [number, number];
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
