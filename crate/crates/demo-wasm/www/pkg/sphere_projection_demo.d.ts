/* tslint:disable */
/* eslint-disable */

export class KappaCurves {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly kappaDoublePrime: Float64Array;
    readonly kappaPrime: Float64Array;
    readonly r: Float64Array;
}

export class Samples {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly expectedMean: Float64Array;
    readonly points: Float64Array;
}

export class Tracking {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Per-point errors of estimator `index` (0 VMFF, 1 VMFS, 2 GF, 3 GS).
     */
    errors(index: number): Float64Array | undefined;
    readonly meanErrors: Float64Array;
    readonly times: Float64Array;
    readonly truth: Float64Array;
}

export function kappaCurves(r_max: number, points: number): KappaCurves;

/**
 * Simulates one trajectory and runs VMFF, VMFS, GF and GS on it.
 */
export function track(alpha2: number, s: number, duration_s: number, seed: number): Tracking;

export function vmfSamples(x: number, y: number, z: number, count: number, seed: number): Samples;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_kappacurves_free: (a: number, b: number) => void;
    readonly __wbg_samples_free: (a: number, b: number) => void;
    readonly __wbg_tracking_free: (a: number, b: number) => void;
    readonly kappaCurves: (a: number, b: number) => [number, number, number];
    readonly kappacurves_kappaDoublePrime: (a: number) => [number, number];
    readonly kappacurves_kappaPrime: (a: number) => [number, number];
    readonly kappacurves_r: (a: number) => [number, number];
    readonly samples_expectedMean: (a: number) => [number, number];
    readonly samples_points: (a: number) => [number, number];
    readonly track: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly tracking_errors: (a: number, b: number) => [number, number];
    readonly tracking_meanErrors: (a: number) => [number, number];
    readonly tracking_times: (a: number) => [number, number];
    readonly tracking_truth: (a: number) => [number, number];
    readonly vmfSamples: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
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
