/* tslint:disable */
/* eslint-disable */

/**
 * Layouts, climates and U-value bounds for populating the controls.
 */
export function catalog(): string;

/**
 * Pareto filter plus HV, EU and SP for a JSON list of return vectors.
 */
export function front_metrics(points_json: string): string;

/**
 * Runs a proportional controller `a = gain·(setpoint − T)` for `hours`
 * control steps and returns the temperature and power traces.
 */
export function simulate(layout: string, climate: string, u_wall: Float64Array, gain: number, setpoint: number, hours: number, start_hour: number): string;

/**
 * Trains a small policy set on the two-zone building and returns the fronts
 * after initialization and after one extension round.
 */
export function train_front(seed: bigint, iterations: number, population: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly catalog: () => [number, number];
    readonly front_metrics: (a: number, b: number) => [number, number];
    readonly simulate: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number, j: number) => [number, number];
    readonly train_front: (a: bigint, b: number, c: number) => [number, number];
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
