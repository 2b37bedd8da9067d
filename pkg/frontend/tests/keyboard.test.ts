import { describe, expect, it } from "vitest";
import { actionFor, KEY_HELP } from "../src/keyboard.js";

function event(key: string, init: KeyboardEventInit = {}): KeyboardEvent {
  return new KeyboardEvent("keydown", { key, bubbles: true, ...init });
}

describe("actionFor", () => {
  it("maps the single-key bindings", () => {
    expect(actionFor(event("c"))).toBe("confirm");
    expect(actionFor(event("y"))).toBe("confirm");
    expect(actionFor(event("x"))).toBe("reject");
    expect(actionFor(event("r"))).toBe("reassign");
    expect(actionFor(event("j"))).toBe("next-proposal");
    expect(actionFor(event("k"))).toBe("prev-proposal");
    expect(actionFor(event("ArrowDown"))).toBe("next-proposal");
    expect(actionFor(event("n"))).toBe("next-image");
    expect(actionFor(event("ArrowLeft"))).toBe("prev-image");
    expect(actionFor(event("Enter"))).toBe("submit");
  });

  it("returns null for unbound keys", () => {
    expect(actionFor(event("q"))).toBeNull();
    expect(actionFor(event("Escape"))).toBeNull();
  });

  it("ignores chords with modifiers", () => {
    expect(actionFor(event("c", { ctrlKey: true }))).toBeNull();
    expect(actionFor(event("c", { metaKey: true }))).toBeNull();
    expect(actionFor(event("x", { altKey: true }))).toBeNull();
  });

  it("ignores keys typed into form fields", () => {
    const input = document.createElement("input");
    document.body.append(input);
    let action: string | null = "unset";
    input.addEventListener("keydown", (ev) => {
      action = actionFor(ev);
    });
    input.dispatchEvent(event("c"));
    expect(action).toBeNull();
    input.remove();
  });

  it("documents every distinct action in the help table", () => {
    expect(KEY_HELP.length).toBeGreaterThanOrEqual(5);
    const text = KEY_HELP.map((h) => `${h.keys} ${h.what}`).join(" ");
    for (const word of ["confirm", "reject", "reassign", "submit"]) {
      expect(text).toContain(word);
    }
  });
});
