/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_kappacurves_free: (a: number, b: number) => void;
export const __wbg_samples_free: (a: number, b: number) => void;
export const __wbg_tracking_free: (a: number, b: number) => void;
export const kappaCurves: (a: number, b: number) => [number, number, number];
export const kappacurves_kappaDoublePrime: (a: number) => [number, number];
export const kappacurves_kappaPrime: (a: number) => [number, number];
export const kappacurves_r: (a: number) => [number, number];
export const samples_expectedMean: (a: number) => [number, number];
export const samples_points: (a: number) => [number, number];
export const track: (a: number, b: number, c: number, d: number) => [number, number, number];
export const tracking_errors: (a: number, b: number) => [number, number];
export const tracking_meanErrors: (a: number) => [number, number];
export const tracking_times: (a: number) => [number, number];
export const tracking_truth: (a: number) => [number, number];
export const vmfSamples: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
