"use strict";
var __importDefault = (this && this.__importDefault) || function (mod) {
    return (mod && mod.__esModule) ? mod : { "default": mod };
};
Object.defineProperty(exports, "__esModule", { value: true });
const strict_1 = __importDefault(require("node:assert/strict"));
const node_test_1 = require("node:test");
const actions_js_1 = require("../src/actions.js");
(0, node_test_1.test)("direction table is the fixed compass ordering", () => {
    strict_1.default.deepEqual(actions_js_1.DIRECTIONS.map((d) => [...d]), [
        [0, -1], [1, -1], [1, 0], [1, 1], [0, 1], [-1, 1], [-1, 0], [-1, -1],
    ]);
});
(0, node_test_1.test)("north key maps to action index 0", () => {
    strict_1.default.equal((0, actions_js_1.keyToActionIndex)("ArrowUp", false), 0);
    strict_1.default.equal((0, actions_js_1.keyToActionIndex)("k", false), 0);
    strict_1.default.equal((0, actions_js_1.keyToActionIndex)("8", false), 0);
});
(0, node_test_1.test)("all eight directions reachable from vi keys", () => {
    const keys = ["k", "u", "l", "n", "j", "b", "h", "y"];
    strict_1.default.deepEqual(keys.map((k) => (0, actions_js_1.keyToActionIndex)(k, false)), [0, 1, 2, 3, 4, 5, 6, 7]);
});
(0, node_test_1.test)("ranged mode shifts direction keys into 9-16", () => {
    strict_1.default.equal((0, actions_js_1.keyToActionIndex)("k", true), 9);
    strict_1.default.equal((0, actions_js_1.keyToActionIndex)("y", true), 16);
    strict_1.default.equal((0, actions_js_1.rangedIndexFor)(2), 11);
});
(0, node_test_1.test)("potion key is index 8 in either mode", () => {
    strict_1.default.equal((0, actions_js_1.keyToActionIndex)("p", false), 8);
    strict_1.default.equal((0, actions_js_1.keyToActionIndex)("p", true), 8);
});
(0, node_test_1.test)("unbound keys map to nothing", () => {
    strict_1.default.equal((0, actions_js_1.keyToActionIndex)("q", false), null);
    strict_1.default.equal((0, actions_js_1.keyToActionIndex)(" ", true), null);
});
(0, node_test_1.test)("moveIndexFor inverts the direction table", () => {
    actions_js_1.DIRECTIONS.forEach(([dx, dy], index) => {
        strict_1.default.equal((0, actions_js_1.moveIndexFor)(dx, dy), index);
    });
    strict_1.default.equal((0, actions_js_1.moveIndexFor)(2, 0), null);
});
(0, node_test_1.test)("describeAction covers the whole space", () => {
    strict_1.default.equal((0, actions_js_1.describeAction)(0), "move N");
    strict_1.default.equal((0, actions_js_1.describeAction)(8), "use potion");
    strict_1.default.equal((0, actions_js_1.describeAction)(9), "ranged N");
    strict_1.default.equal((0, actions_js_1.describeAction)(16), "ranged NW");
});
