/**
 * Deterministic teacher-forced scoring model.
 *
 * The tokenizer splits text into whitespace-attached word pieces whose
 * concatenation reproduces the input exactly. Scoring walks the target
 * left to right with the gold prefix visible (teacher forcing): at each
 * position the logit of a piece is log(count in prefix + 1), and the
 * returned value is the gold piece's log-softmax over the distinct-piece
 * vocabulary of the request. No sampling, no state between requests.
 */

export interface ScoreResult {
  tokens: string[];
  logprobs: number[];
  modelId: string;
}

/** Marks failures inside the model itself, mapped to HTTP 500 upstream. */
export class ModelError extends Error {}

const UNKNOWN = "<unk>";

export function tokenize(text: string): string[] {
  const pieces = text.match(/\s*\S+|\s+$/gu);
  return pieces ?? (text.length > 0 ? [text] : []);
}

export class TeacherForcedScorer {
  constructor(readonly modelId: string) {
    if (!modelId) {
      throw new ModelError("model identifier must be non-empty");
    }
  }

  score(context: string, target: string): ScoreResult {
    const contextPieces = tokenize(context);
    const targetPieces = tokenize(target);
    if (targetPieces.join("") !== target) {
      throw new ModelError("tokenizer failed to cover the target");
    }

    const vocabulary = new Set<string>([UNKNOWN, ...contextPieces, ...targetPieces]);
    const counts = new Map<string, number>();
    for (const piece of contextPieces) {
      counts.set(piece, (counts.get(piece) ?? 0) + 1);
    }

    let prefixLength = contextPieces.length;
    const logprobs: number[] = [];
    for (const piece of targetPieces) {
      // softmax of logits log(count+1) reduces to (count+1) / (|prefix| + |V|)
      const seen = counts.get(piece) ?? 0;
      logprobs.push(Math.log(seen + 1) - Math.log(prefixLength + vocabulary.size));
      counts.set(piece, seen + 1);
      prefixLength += 1;
    }
    return { tokens: targetPieces, logprobs, modelId: this.modelId };
  }
}
