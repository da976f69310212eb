/** Pure client-side round state: selection tracking and the submit gate.
 *
 * The submit predicate here mirrors the server's validation exactly; the
 * server remains the authority and client checks never replace it.
 */

import type { RoundTile } from "./api.js";

export interface ClientRoundState {
  roundIndex: number;
  tiles: RoundTile[];
  selected: Set<number>;
  k: number;
  ell: number;
}

export function newRoundState(
  roundIndex: number,
  tiles: RoundTile[],
  k: number,
  ell: number,
): ClientRoundState {
  return { roundIndex, tiles, selected: new Set(), k, ell };
}

/** Toggle a tile; selecting beyond k is ignored (deselect first). */
export function toggleTile(state: ClientRoundState, tileId: number): ClientRoundState {
  if (!state.tiles.some((t) => t.id === tileId)) return state;
  const selected = new Set(state.selected);
  if (selected.has(tileId)) {
    selected.delete(tileId);
  } else if (selected.size < state.k) {
    selected.add(tileId);
  }
  return { ...state, selected };
}

export function numBlueSelected(state: ClientRoundState): number {
  let count = 0;
  for (const tile of state.tiles) {
    if (tile.color === "blue" && state.selected.has(tile.id)) count += 1;
  }
  return count;
}

/** True iff the server would accept this selection. */
export function submitEnabled(state: ClientRoundState): boolean {
  return state.selected.size === state.k && numBlueSelected(state) >= state.ell;
}

/** Why the submit gate is closed, for the inline hint ('' when open). */
export function constraintHint(state: ClientRoundState): string {
  if (state.selected.size !== state.k) {
    return `Select ${state.k - state.selected.size} more tile(s).`;
  }
  if (numBlueSelected(state) < state.ell) {
    return `At least ${state.ell} blue tile(s) must be selected.`;
  }
  return "";
}

export function selectedIds(state: ClientRoundState): number[] {
  return Array.from(state.selected);
}
