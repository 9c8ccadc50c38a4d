/* tslint:disable */
/* eslint-disable */

/**
 * Log-power spectrogram, frame-major, in dB.
 */
export class Spectrogram {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    bins(): number;
    /**
     * `frames * bins` values; frame `f`, bin `k` is at `f * bins + k`.
     */
    data(): Float32Array;
    frames(): number;
    max_db(): number;
    min_db(): number;
}

/**
 * Seeded forward pass with `k x d` actions. When `samples` is non-empty its
 * spectrogram frames become the audio tokens. Returns the report as JSON.
 */
export function fuse_demo(seed: number, k: number, d: number, samples: Float32Array): string;

/**
 * Material pairs available in the built-in library, as a JSON array of
 * `"first/second"` strings.
 */
export function material_pairs(): string;

/**
 * Renders one contact event (`pair` as `"first/second"`) and returns mono
 * samples at 48 kHz.
 */
export function render_contact(pair: string, interaction: string, force: number, size: number, duration: number): Float32Array;

export function spectrogram(samples: Float32Array): Spectrogram;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_spectrogram_free: (a: number, b: number) => void;
    readonly fuse_demo: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly material_pairs: () => [number, number];
    readonly render_contact: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
    readonly spectrogram: (a: number, b: number) => [number, number, number];
    readonly spectrogram_bins: (a: number) => number;
    readonly spectrogram_data: (a: number) => [number, number];
    readonly spectrogram_frames: (a: number) => number;
    readonly spectrogram_max_db: (a: number) => number;
    readonly spectrogram_min_db: (a: number) => number;
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
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
