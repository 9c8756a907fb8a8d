/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_scene_free: (a: number, b: number) => void;
export const __wbg_segmentation_free: (a: number, b: number) => void;
export const scene_height: (a: number) => number;
export const scene_new: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
export const scene_noisyRgba: (a: number) => [number, number];
export const scene_numLabels: (a: number) => number;
export const scene_segment: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
export const scene_truthRgba: (a: number) => [number, number];
export const scene_width: (a: number) => number;
export const segmentation_dice: (a: number) => number;
export const segmentation_iterations: (a: number) => number;
export const segmentation_labelsRgba: (a: number) => [number, number];
export const segmentation_objectiveTrace: (a: number) => [number, number];
export const segmentation_psnr: (a: number) => number;
export const segmentation_reconstructionRgba: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
