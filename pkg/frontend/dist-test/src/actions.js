"use strict";
/**
 * The fixed 17-action indexing shared with the engine:
 * 0-7 move N,NE,E,SE,S,SW,W,NW; 8 use potion; 9-16 ranged same order.
 * (x grows east, y grows south, so N is dy = -1.)
 */
Object.defineProperty(exports, "__esModule", { value: true });
exports.USE_POTION_INDEX = exports.DIRECTIONS = exports.DIRECTION_NAMES = void 0;
exports.moveIndexFor = moveIndexFor;
exports.rangedIndexFor = rangedIndexFor;
exports.describeAction = describeAction;
exports.keyToActionIndex = keyToActionIndex;
exports.isRangedModeKey = isRangedModeKey;
exports.isCancelKey = isCancelKey;
exports.DIRECTION_NAMES = ["N", "NE", "E", "SE", "S", "SW", "W", "NW"];
exports.DIRECTIONS = [
    [0, -1], [1, -1], [1, 0], [1, 1], [0, 1], [-1, 1], [-1, 0], [-1, -1],
];
exports.USE_POTION_INDEX = 8;
function moveIndexFor(dx, dy) {
    const found = exports.DIRECTIONS.findIndex(([x, y]) => x === dx && y === dy);
    return found >= 0 ? found : null;
}
function rangedIndexFor(direction) {
    return 9 + direction;
}
function describeAction(index) {
    if (index >= 0 && index <= 7)
        return `move ${exports.DIRECTION_NAMES[index]}`;
    if (index === exports.USE_POTION_INDEX)
        return "use potion";
    if (index >= 9 && index <= 16)
        return `ranged ${exports.DIRECTION_NAMES[index - 9]}`;
    return `action ${index}`;
}
/**
 * Keyboard layout: vi keys and numpad cover all 8 directions, arrow
 * keys the cardinal four, "p" drinks the potion, "f" toggles ranged
 * mode (the next direction key fires instead of moving).
 */
const KEY_DIRECTIONS = {
    k: 0, u: 1, l: 2, n: 3, j: 4, b: 5, h: 6, y: 7,
    "8": 0, "9": 1, "6": 2, "3": 3, "2": 4, "1": 5, "4": 6, "7": 7,
    ArrowUp: 0, ArrowRight: 2, ArrowDown: 4, ArrowLeft: 6,
};
function keyToActionIndex(key, rangedMode) {
    if (key === "p" || key === "P")
        return exports.USE_POTION_INDEX;
    const direction = KEY_DIRECTIONS[key];
    if (direction === undefined)
        return null;
    return rangedMode ? rangedIndexFor(direction) : direction;
}
function isRangedModeKey(key) {
    return key === "f" || key === "F";
}
function isCancelKey(key) {
    return key === "Escape";
}
