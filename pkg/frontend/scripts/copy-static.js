// Assembles dist/: compiled modules already in place, static assets copied in.
const fs = require("fs");
const path = require("path");

const root = path.join(__dirname, "..");
const dist = path.join(root, "dist");
fs.mkdirSync(dist, { recursive: true });
fs.copyFileSync(path.join(root, "static", "index.html"), path.join(dist, "index.html"));
fs.copyFileSync(path.join(root, "static", "styles.css"), path.join(dist, "styles.css"));
console.log("static assets copied to dist/");
