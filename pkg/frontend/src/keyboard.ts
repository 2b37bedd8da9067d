/** Single-key bindings for the labeling screen. Decisions are one
 * keystroke; reassignment opens the class picker. */

export type LabelingAction =
  | "confirm"
  | "reject"
  | "reassign"
  | "next-proposal"
  | "prev-proposal"
  | "next-image"
  | "prev-image"
  | "submit";

const KEYMAP: Record<string, LabelingAction> = {
  c: "confirm",
  y: "confirm",
  x: "reject",
  r: "reassign",
  j: "next-proposal",
  ArrowDown: "next-proposal",
  k: "prev-proposal",
  ArrowUp: "prev-proposal",
  n: "next-image",
  ArrowRight: "next-image",
  p: "prev-image",
  ArrowLeft: "prev-image",
  Enter: "submit",
};

export const KEY_HELP: { keys: string; what: string }[] = [
  { keys: "c / y", what: "confirm proposal" },
  { keys: "x", what: "reject proposal" },
  { keys: "r", what: "reassign class (type-ahead picker)" },
  { keys: "j / k", what: "next / previous proposal" },
  { keys: "n / p or ← →", what: "next / previous image" },
  { keys: "enter", what: "submit the batch" },
];

function isEditable(target: EventTarget | null): boolean {
  if (!(target instanceof HTMLElement)) return false;
  const tag = target.tagName;
  return (
    tag === "INPUT" || tag === "TEXTAREA" || tag === "SELECT" || target.isContentEditable
  );
}

/** The labeling action of a keydown event, or null when the key is
 * unbound, a modifier is held, or the user is typing in a field. */
export function actionFor(event: KeyboardEvent): LabelingAction | null {
  if (event.ctrlKey || event.metaKey || event.altKey) return null;
  if (isEditable(event.target)) return null;
  return KEYMAP[event.key] ?? null;
}
