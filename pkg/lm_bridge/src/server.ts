/**
 * HTTP surface of the scoring service.
 *
 *   GET  /health -> {"model": "...", "ready": bool}
 *   POST /score  {"sentences": [...]} -> {"logprobs": [...]}
 *
 * Responses preserve input order and always have one logprob per sentence.
 * Errors: malformed or invalid request bodies get 400, oversized batches
 * 413, scoring failures 500, and scoring before the model has loaded 503.
 * Scoring runs synchronously on the event loop, so concurrent clients are
 * serialized and only ever observe latency.
 */

import express, { type Express, type NextFunction, type Request, type Response } from "express";
import { z } from "zod";

import type { SentenceScorer } from "./model.js";

export interface ServerOptions {
  maxBatch?: number;
}

const scoreRequest = z.object({
  sentences: z.array(z.string().min(1)).min(1),
});

export function createApp(model: SentenceScorer, options: ServerOptions = {}): Express {
  const maxBatch = options.maxBatch ?? 64;
  const app = express();
  app.use(express.json({ limit: "2mb" }));

  app.get("/health", (_req: Request, res: Response) => {
    res.json({ model: model.name, ready: model.ready });
  });

  app.post("/score", (req: Request, res: Response) => {
    const parsed = scoreRequest.safeParse(req.body);
    if (!parsed.success) {
      res.status(400).json({
        error: `invalid request: ${parsed.error.issues[0]?.message ?? "bad body"}`,
      });
      return;
    }
    const { sentences } = parsed.data;
    if (sentences.length > maxBatch) {
      res.status(413).json({
        error: `batch of ${sentences.length} exceeds the maximum of ${maxBatch}`,
      });
      return;
    }
    if (!model.ready) {
      res.status(503).json({ error: "model is still loading" });
      return;
    }
    let logprobs: number[];
    try {
      logprobs = sentences.map((s) => model.scoreSentence(s));
    } catch (err) {
      res.status(500).json({ error: `scoring failed: ${String(err)}` });
      return;
    }
    if (logprobs.some((x) => !Number.isFinite(x))) {
      res.status(500).json({ error: "scoring produced a non-finite value" });
      return;
    }
    res.json({ logprobs });
  });

  // body-parser JSON syntax errors land here
  app.use((err: unknown, _req: Request, res: Response, next: NextFunction) => {
    if (err instanceof SyntaxError) {
      res.status(400).json({ error: `malformed JSON: ${err.message}` });
      return;
    }
    next(err);
  });

  return app;
}
