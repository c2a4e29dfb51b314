/** Keyboard bindings: y/n mirror the Yes/No buttons exactly. */

import { Judgment } from "./session.js";

export function judgmentForKey(key: string): Judgment | null {
  switch (key.toLowerCase()) {
    case "y":
      return "yes";
    case "n":
      return "no";
    default:
      return null;
  }
}
