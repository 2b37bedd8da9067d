import type { Box } from "./types.js";

/** Box geometry helpers. Proposals arrive in normalized center/size
 * coordinates; overlays are positioned with percentages so they track
 * the displayed image at any zoom without re-measuring. */

export interface CssRect {
  left: string;
  top: string;
  width: string;
  height: string;
}

export function boxCss(box: Box): CssRect {
  return {
    left: `${(box.cx - box.w / 2) * 100}%`,
    top: `${(box.cy - box.h / 2) * 100}%`,
    width: `${box.w * 100}%`,
    height: `${box.h * 100}%`,
  };
}

export interface PixelRect {
  x: number;
  y: number;
  w: number;
  h: number;
}

/** The same rectangle in intrinsic image pixels. */
export function boxToPixels(box: Box, imageSize: number): PixelRect {
  return {
    x: (box.cx - box.w / 2) * imageSize,
    y: (box.cy - box.h / 2) * imageSize,
    w: box.w * imageSize,
    h: box.h * imageSize,
  };
}

export function iou(a: PixelRect, b: PixelRect): number {
  const x1 = Math.max(a.x, b.x);
  const y1 = Math.max(a.y, b.y);
  const x2 = Math.min(a.x + a.w, b.x + b.w);
  const y2 = Math.min(a.y + a.h, b.y + b.h);
  const inter = Math.max(0, x2 - x1) * Math.max(0, y2 - y1);
  const union = a.w * a.h + b.w * b.h - inter;
  return union > 0 ? inter / union : 0;
}
