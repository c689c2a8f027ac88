/** HTTP wiring for the scoring protocol: POST /score and GET /health. */

import express, { type Express } from "express";

import type { ServiceConfig } from "./config.js";
import { TeacherForcedScorer, tokenize, type ScoreResult } from "./model.js";

export interface Scorer {
  score(context: string, target: string): ScoreResult;
}

export function createApp(config: ServiceConfig, scorer?: Scorer): Express {
  const model = scorer ?? new TeacherForcedScorer(config.modelId);
  const app = express();
  app.use(express.json({ limit: "5mb" }));

  app.get("/health", (_req, res) => {
    res.json({ status: "ok" });
  });

  app.post("/score", (req, res) => {
    const { context, target } = req.body ?? {};
    if (typeof context !== "string" || typeof target !== "string") {
      res.status(400).json({
        error: "bad_request",
        detail: "body must be {context: string, target: string}",
      });
      return;
    }
    const contextTokens = tokenize(context).length;
    if (contextTokens > config.maxContextLength) {
      res.status(413).json({
        error: "context_too_long",
        detail:
          `context has ${contextTokens} tokens but the limit is ` +
          `${config.maxContextLength}; truncate it to the last ` +
          `${config.maxContextLength} tokens and retry`,
      });
      return;
    }
    try {
      const result = model.score(context, target);
      res.json({
        tokens: result.tokens,
        logprobs: result.logprobs,
        model_id: result.modelId,
      });
    } catch (err) {
      res.status(500).json({
        error: "model_failure",
        detail: err instanceof Error ? err.message : String(err),
      });
    }
  });

  return app;
}
