/**
 * The fixed 17-action indexing shared with the engine:
 * 0-7 move N,NE,E,SE,S,SW,W,NW; 8 use potion; 9-16 ranged same order.
 * (x grows east, y grows south, so N is dy = -1.)
 */

export const DIRECTION_NAMES = ["N", "NE", "E", "SE", "S", "SW", "W", "NW"] as const;

export const DIRECTIONS: ReadonlyArray<readonly [number, number]> = [
  [0, -1], [1, -1], [1, 0], [1, 1], [0, 1], [-1, 1], [-1, 0], [-1, -1],
];

export const USE_POTION_INDEX = 8;

export function moveIndexFor(dx: number, dy: number): number | null {
  const found = DIRECTIONS.findIndex(([x, y]) => x === dx && y === dy);
  return found >= 0 ? found : null;
}

export function rangedIndexFor(direction: number): number {
  return 9 + direction;
}

export function describeAction(index: number): string {
  if (index >= 0 && index <= 7) return `move ${DIRECTION_NAMES[index]}`;
  if (index === USE_POTION_INDEX) return "use potion";
  if (index >= 9 && index <= 16) return `ranged ${DIRECTION_NAMES[index - 9]}`;
  return `action ${index}`;
}

/**
 * Keyboard layout: vi keys and numpad cover all 8 directions, arrow
 * keys the cardinal four, "p" drinks the potion, "f" toggles ranged
 * mode (the next direction key fires instead of moving).
 */
const KEY_DIRECTIONS: Record<string, number> = {
  k: 0, u: 1, l: 2, n: 3, j: 4, b: 5, h: 6, y: 7,
  "8": 0, "9": 1, "6": 2, "3": 3, "2": 4, "1": 5, "4": 6, "7": 7,
  ArrowUp: 0, ArrowRight: 2, ArrowDown: 4, ArrowLeft: 6,
};

export function keyToActionIndex(key: string, rangedMode: boolean): number | null {
  if (key === "p" || key === "P") return USE_POTION_INDEX;
  const direction = KEY_DIRECTIONS[key];
  if (direction === undefined) return null;
  return rangedMode ? rangedIndexFor(direction) : direction;
}

export function isRangedModeKey(key: string): boolean {
  return key === "f" || key === "F";
}

export function isCancelKey(key: string): boolean {
  return key === "Escape";
}
