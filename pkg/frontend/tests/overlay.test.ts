import { describe, expect, it } from "vitest";
import { boxCss, boxToPixels, iou } from "../src/overlay.js";
import type { Box } from "../src/types.js";

describe("boxCss", () => {
  it("converts center/size to top-left percentages", () => {
    expect(boxCss({ cx: 0.5, cy: 0.5, w: 0.25, h: 0.25 })).toEqual({
      left: "37.5%",
      top: "37.5%",
      width: "25%",
      height: "25%",
    });
  });

  it("handles boxes touching the image border", () => {
    const css = boxCss({ cx: 0.1, cy: 0.9, w: 0.2, h: 0.2 });
    expect(parseFloat(css.left)).toBeCloseTo(0, 10);
    expect(parseFloat(css.top)).toBeCloseTo(80, 10);
  });
});

describe("boxToPixels / iou", () => {
  it("overlay geometry agrees with the server box exactly (IoU 1)", () => {
    // The overlay div is positioned from percentages; reconstruct its
    // pixel rect on a rendered image and compare with the direct
    // pixel conversion of the same wire box.
    const box: Box = { cx: 0.53, cy: 0.41, w: 0.27, h: 0.19 };
    const size = 480; // displayed size, any zoom
    const css = boxCss(box);
    const fromCss = {
      x: (parseFloat(css.left) / 100) * size,
      y: (parseFloat(css.top) / 100) * size,
      w: (parseFloat(css.width) / 100) * size,
      h: (parseFloat(css.height) / 100) * size,
    };
    const direct = boxToPixels(box, size);
    expect(iou(fromCss, direct)).toBeCloseTo(1.0, 9);
  });

  it("computes intersection over union for partial overlap", () => {
    const a = { x: 0, y: 0, w: 10, h: 10 };
    const b = { x: 5, y: 0, w: 10, h: 10 };
    // intersection 50, union 150
    expect(iou(a, b)).toBeCloseTo(50 / 150, 12);
  });

  it("is zero for disjoint rects and degenerate rects", () => {
    expect(iou({ x: 0, y: 0, w: 1, h: 1 }, { x: 5, y: 5, w: 1, h: 1 })).toBe(0);
    expect(iou({ x: 0, y: 0, w: 0, h: 0 }, { x: 0, y: 0, w: 0, h: 0 })).toBe(0);
  });

  it("scales pixel boxes by the intrinsic image size", () => {
    expect(boxToPixels({ cx: 0.5, cy: 0.5, w: 0.5, h: 0.25 }, 48)).toEqual({
      x: 12,
      y: 18,
      w: 24,
      h: 12,
    });
  });
});
