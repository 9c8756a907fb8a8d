/* tslint:disable */
/* eslint-disable */

/**
 * A synthetic image, its ground truth, and the corrupted copy that gets
 * segmented.
 */
export class Scene {
    free(): void;
    [Symbol.dispose](): void;
    height(): number;
    constructor(preset: string, noise: string, level: number, seed: number);
    noisyRgba(): Uint8Array;
    numLabels(): number;
    /**
     * Segments the noisy image with `"aicv"` or `"aifr"`, using as many
     * regions as the ground truth has.
     */
    segment(model: string, alpha: number, lambda: number, max_outer: number): Segmentation;
    truthRgba(): Uint8Array;
    width(): number;
}

/**
 * Outcome of one segmentation with its scores.
 */
export class Segmentation {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * DICE against the ground truth after matching labels by constant.
     */
    dice(): number;
    iterations(): number;
    labelsRgba(): Uint8Array;
    /**
     * Objective at the start and after every outer iteration.
     */
    objectiveTrace(): Float64Array;
    /**
     * PSNR of the piecewise-constant reconstruction against the clean
     * image; infinite for an exact match.
     */
    psnr(): number;
    reconstructionRgba(): Uint8Array;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_scene_free: (a: number, b: number) => void;
    readonly __wbg_segmentation_free: (a: number, b: number) => void;
    readonly scene_height: (a: number) => number;
    readonly scene_new: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
    readonly scene_noisyRgba: (a: number) => [number, number];
    readonly scene_numLabels: (a: number) => number;
    readonly scene_segment: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
    readonly scene_truthRgba: (a: number) => [number, number];
    readonly scene_width: (a: number) => number;
    readonly segmentation_dice: (a: number) => number;
    readonly segmentation_iterations: (a: number) => number;
    readonly segmentation_labelsRgba: (a: number) => [number, number];
    readonly segmentation_objectiveTrace: (a: number) => [number, number];
    readonly segmentation_psnr: (a: number) => number;
    readonly segmentation_reconstructionRgba: (a: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
