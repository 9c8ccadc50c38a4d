/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_spectrogram_free: (a: number, b: number) => void;
export const fuse_demo: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const material_pairs: () => [number, number];
export const render_contact: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
export const spectrogram: (a: number, b: number) => [number, number, number];
export const spectrogram_bins: (a: number) => number;
export const spectrogram_data: (a: number) => [number, number];
export const spectrogram_frames: (a: number) => number;
export const spectrogram_max_db: (a: number) => number;
export const spectrogram_min_db: (a: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
