export * from "./schemas.js";
export * from "./grid.js";
export * from "./session.js";
export * from "./client.js";
