/**
 * Service entry point.
 *
 *   node dist/index.js [--port N] [--max-batch N] [--seed N]
 *
 * Environment fallbacks: PORT, LM_BRIDGE_MAX_BATCH, LM_BRIDGE_SEED. The
 * server starts listening immediately and reports ready=false from /health
 * until the model has finished loading.
 */

import { TinyRnnLm } from "./model.js";
import { createApp } from "./server.js";

function intArg(flag: string, envVar: string, fallback: number): number {
  const i = process.argv.indexOf(flag);
  const raw = i >= 0 ? process.argv[i + 1] : process.env[envVar];
  if (raw === undefined) return fallback;
  const value = Number.parseInt(raw, 10);
  if (Number.isNaN(value)) {
    console.error(`bad value for ${flag}: ${raw}`);
    process.exit(2);
  }
  return value;
}

const port = intArg("--port", "PORT", 8090);
const maxBatch = intArg("--max-batch", "LM_BRIDGE_MAX_BATCH", 64);
const seed = intArg("--seed", "LM_BRIDGE_SEED", 1234);

const model = new TinyRnnLm({ seed });
const app = createApp(model, { maxBatch });

const server = app.listen(port, () => {
  console.log(`lm-bridge listening on :${port} (model ${model.name}, loading)`);
  setTimeout(() => {
    const started = Date.now();
    model.train();
    console.log(`model ready after ${Date.now() - started}ms`);
  }, 0);
});

for (const signal of ["SIGINT", "SIGTERM"] as const) {
  process.on(signal, () => server.close(() => process.exit(0)));
}
