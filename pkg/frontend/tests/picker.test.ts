import { describe, expect, it } from "vitest";
import { buildEntries, ClassPicker, filterClasses, rankClasses } from "../src/picker.js";

const CLASSES = ["disk", "square", "triangle"];

describe("rankClasses", () => {
  it("keeps registry order without a distribution", () => {
    expect(rankClasses(CLASSES).map((e) => e.name)).toEqual(CLASSES);
  });

  it("orders by descending distribution mass", () => {
    const ranked = rankClasses(CLASSES, [0.1, 0.2, 0.7]);
    expect(ranked.map((e) => e.name)).toEqual(["triangle", "square", "disk"]);
    expect(ranked.map((e) => e.id)).toEqual([2, 1, 0]);
  });

  it("breaks ties by registry order", () => {
    const ranked = rankClasses(CLASSES, [0.4, 0.4, 0.2]);
    expect(ranked.map((e) => e.name)).toEqual(["disk", "square", "triangle"]);
  });
});

describe("filterClasses", () => {
  const entries = rankClasses(["square", "disk", "ring", "bar"]);

  it("puts prefix matches before substring matches", () => {
    // "r" prefixes "ring" but only appears inside "square" and "bar"
    expect(filterClasses(entries, "r").map((e) => e.name)).toEqual(["ring", "square", "bar"]);
  });

  it("is case-insensitive", () => {
    expect(filterClasses(entries, "RI").map((e) => e.name)).toEqual(["ring"]);
  });

  it("returns everything for a blank query", () => {
    expect(filterClasses(entries, "  ")).toHaveLength(4);
  });
});

describe("buildEntries", () => {
  it("appends a create entry when the query names no existing class", () => {
    const entries = buildEntries(CLASSES, undefined, "blob");
    expect(entries).toHaveLength(1);
    expect(entries[0]).toEqual({ id: null, name: "blob", create: true });
  });

  it("offers no create entry when the query matches an existing class", () => {
    const entries = buildEntries(CLASSES, undefined, "DISK");
    expect(entries.some((e) => e.create)).toBe(false);
    expect(entries[0].name).toBe("disk");
  });

  it("offers no create entry for a blank query", () => {
    expect(buildEntries(CLASSES, undefined, " ").some((e) => e.create)).toBe(false);
  });
});

function key(name: string): KeyboardEvent {
  return new KeyboardEvent("keydown", { key: name, bubbles: true, cancelable: true });
}

describe("ClassPicker", () => {
  function openPicker(distribution?: number[]) {
    const picker = new ClassPicker(document);
    document.body.append(picker.el);
    const picks: { classId: number | null; className: string }[] = [];
    let cancelled = 0;
    picker.open({
      classes: CLASSES,
      distribution,
      onPick: (p) => picks.push(p),
      onCancel: () => cancelled++,
    });
    const input = picker.el.querySelector<HTMLInputElement>("#picker-input")!;
    return { picker, input, picks, cancelled: () => cancelled };
  }

  it("highlights the proposal's top class by default and Enter picks it", () => {
    const { picker, input, picks } = openPicker([0.1, 0.2, 0.7]);
    const items = picker.el.querySelectorAll("#picker-list li");
    expect(items[0].textContent).toBe("triangle");
    expect(items[0].className).toContain("highlight");
    input.dispatchEvent(key("Enter"));
    expect(picks).toEqual([{ classId: 2, className: "triangle" }]);
    expect(picker.isOpen).toBe(false);
  });

  it("type-ahead narrows the list and picks the filtered match", () => {
    const { picker, input, picks } = openPicker();
    input.value = "squ";
    input.dispatchEvent(new Event("input", { bubbles: true }));
    // the one matching class, plus the offer to create the literal "squ"
    const items = picker.el.querySelectorAll("#picker-list li");
    expect(items).toHaveLength(2);
    expect(items[0].textContent).toBe("square");
    expect(items[1].classList.contains("create")).toBe(true);
    input.dispatchEvent(key("Enter"));
    expect(picks).toEqual([{ classId: 1, className: "square" }]);
  });

  it("typing an unknown name offers creation and Enter creates it", () => {
    const { picker, input, picks } = openPicker();
    input.value = "blob";
    input.dispatchEvent(new Event("input", { bubbles: true }));
    const items = picker.el.querySelectorAll("#picker-list li");
    expect(items).toHaveLength(1);
    expect(items[0].classList.contains("create")).toBe(true);
    input.dispatchEvent(key("Enter"));
    expect(picks).toEqual([{ classId: null, className: "blob" }]);
    expect(picker.isOpen).toBe(false);
  });

  it("arrow keys move the highlight before picking", () => {
    const { picker, input, picks } = openPicker();
    input.dispatchEvent(key("ArrowDown"));
    input.dispatchEvent(key("ArrowDown"));
    input.dispatchEvent(key("ArrowUp"));
    const items = picker.el.querySelectorAll("#picker-list li");
    expect(items[1].className).toContain("highlight");
    input.dispatchEvent(key("Enter"));
    expect(picks).toEqual([{ classId: 1, className: "square" }]);
  });

  it("Escape cancels without picking", () => {
    const { picker, input, picks, cancelled } = openPicker();
    input.dispatchEvent(key("Escape"));
    expect(picks).toHaveLength(0);
    expect(cancelled()).toBe(1);
    expect(picker.isOpen).toBe(false);
  });

  it("swallows keys so labeling shortcuts don't fire underneath", () => {
    const { input } = openPicker();
    let leaked = 0;
    const listener = () => leaked++;
    document.addEventListener("keydown", listener);
    input.dispatchEvent(key("x"));
    input.dispatchEvent(key("Enter"));
    document.removeEventListener("keydown", listener);
    expect(leaked).toBe(0);
  });

  it("clicking an entry picks it", () => {
    const { picker, picks } = openPicker();
    const items = picker.el.querySelectorAll<HTMLLIElement>("#picker-list li");
    items[2].click();
    expect(picks).toEqual([{ classId: 2, className: "triangle" }]);
    expect(picker.isOpen).toBe(false);
  });
});
