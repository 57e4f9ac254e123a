/**
 * A small word-level recurrent neural language model.
 *
 * No external weights are fetched: the model trains at service startup on an
 * embedded templated corpus, with seeded initialization and a fixed data
 * order, so two service instances with the same seed return bit-identical
 * scores. Scoring returns the total natural-log probability of a sentence,
 * including the end-of-sentence term; unknown words map to a reserved
 * symbol, so every input gets a finite score.
 */

import { Rng } from "./rng.js";

export interface SentenceScorer {
  readonly name: string;
  readonly ready: boolean;
  scoreSentence(text: string): number;
}

const END = "</s>";
const UNK = "<unk>";

const DETERMINERS = ["the", "a"];
const PREPOSITIONS = ["on", "in", "at", "to", "with", "of"];
const NOUNS = [
  "cat", "dog", "bird", "boy", "girl", "teacher", "student", "book",
  "letter", "table", "chair", "garden", "school", "park", "house",
  "river", "friend", "story", "song", "picture",
];
const VERBS = [
  "sits", "walks", "looks", "plays", "reads", "writes", "sleeps",
  "jumps", "sings", "waits",
];
const ADJECTIVES = ["small", "big", "red", "young", "happy", "quiet", "bright"];

const TEMPLATES: readonly (readonly string[])[] = [
  ["det", "noun", "verb", "prep", "det", "noun", "."],
  ["det", "adj", "noun", "verb", "prep", "det", "noun", "."],
  ["det", "noun", "of", "det", "noun", "verb", "."],
  ["det", "noun", "verb", "."],
  ["det", "adj", "noun", "verb", "prep", "det", "adj", "noun", "."],
];

const SLOTS: Record<string, readonly string[]> = {
  det: DETERMINERS,
  prep: PREPOSITIONS,
  noun: NOUNS,
  verb: VERBS,
  adj: ADJECTIVES,
};

function trainingSentences(n: number, rng: Rng): string[][] {
  const out: string[][] = [];
  for (let i = 0; i < n; i++) {
    const template = rng.choice(TEMPLATES);
    out.push(template.map((slot) => (SLOTS[slot] ? rng.choice(SLOTS[slot]) : slot)));
  }
  return out;
}

type Matrix = number[][];

function zeros(rows: number, cols: number): Matrix {
  return Array.from({ length: rows }, () => new Array<number>(cols).fill(0));
}

function randomMatrix(rows: number, cols: number, scale: number, rng: Rng): Matrix {
  return Array.from({ length: rows }, () =>
    Array.from({ length: cols }, () => rng.uniform(-scale, scale)),
  );
}

export interface ModelConfig {
  seed?: number;
  embedDim?: number;
  hiddenDim?: number;
  epochs?: number;
  learningRate?: number;
  corpusSize?: number;
}

export class TinyRnnLm implements SentenceScorer {
  readonly name: string;
  ready = false;

  private readonly cfg: Required<ModelConfig>;
  private vocab: string[] = [];
  private index = new Map<string, number>();
  private emb: Matrix = [];
  private wx: Matrix = []; // hidden x embed
  private wh: Matrix = []; // hidden x hidden
  private bh: number[] = [];
  private wo: Matrix = []; // vocab x hidden
  private bo: number[] = [];

  constructor(config: ModelConfig = {}) {
    this.cfg = {
      seed: config.seed ?? 1234,
      embedDim: config.embedDim ?? 16,
      hiddenDim: config.hiddenDim ?? 24,
      epochs: config.epochs ?? 6,
      learningRate: config.learningRate ?? 0.15,
      corpusSize: config.corpusSize ?? 240,
    };
    this.name = `tiny-rnn-lm-v1-seed${this.cfg.seed}`;
  }

  /** Train on the embedded corpus; flips `ready` when done. */
  train(): void {
    const rng = new Rng(this.cfg.seed);
    const corpus = trainingSentences(this.cfg.corpusSize, rng);

    const words = new Set<string>([END, UNK]);
    for (const sentence of corpus) for (const w of sentence) words.add(w);
    this.vocab = Array.from(words).sort();
    this.index = new Map(this.vocab.map((w, i) => [w, i]));

    const v = this.vocab.length;
    const { embedDim: e, hiddenDim: h } = this.cfg;
    this.emb = randomMatrix(v, e, 0.08, rng);
    this.wx = randomMatrix(h, e, 0.08, rng);
    this.wh = randomMatrix(h, h, 0.08, rng);
    this.bh = new Array(h).fill(0);
    this.wo = randomMatrix(v, h, 0.08, rng);
    this.bo = new Array(v).fill(0);

    for (let epoch = 0; epoch < this.cfg.epochs; epoch++) {
      for (const sentence of corpus) {
        this.sgdStep(sentence.map((w) => this.lookup(w)));
      }
    }
    this.ready = true;
  }

  private lookup(word: string): number {
    return this.index.get(word) ?? this.index.get(UNK)!;
  }

  /** One forward step: consume token id, return new hidden state. */
  private stepHidden(tokenId: number | null, hPrev: number[]): number[] {
    const h = this.cfg.hiddenDim;
    const out = new Array<number>(h);
    for (let i = 0; i < h; i++) {
      let acc = this.bh[i];
      if (tokenId !== null) {
        const x = this.emb[tokenId];
        const row = this.wx[i];
        for (let j = 0; j < x.length; j++) acc += row[j] * x[j];
      }
      const rowH = this.wh[i];
      for (let j = 0; j < h; j++) acc += rowH[j] * hPrev[j];
      out[i] = Math.tanh(acc);
    }
    return out;
  }

  private logProbs(hidden: number[]): number[] {
    const v = this.vocab.length;
    const logits = new Array<number>(v);
    let max = -Infinity;
    for (let k = 0; k < v; k++) {
      let acc = this.bo[k];
      const row = this.wo[k];
      for (let j = 0; j < hidden.length; j++) acc += row[j] * hidden[j];
      logits[k] = acc;
      if (acc > max) max = acc;
    }
    let sum = 0;
    for (let k = 0; k < v; k++) sum += Math.exp(logits[k] - max);
    const logZ = max + Math.log(sum);
    return logits.map((l) => l - logZ);
  }

  /** Backprop through one sentence and apply a clipped SGD update. */
  private sgdStep(ids: number[]): void {
    const targets = [...ids, this.index.get(END)!];
    const h = this.cfg.hiddenDim;
    const e = this.cfg.embedDim;
    const v = this.vocab.length;

    // forward, caching hidden states; step t consumes token t-1 (none at 0)
    const hiddens: number[][] = [];
    let hPrev = new Array<number>(h).fill(0);
    const inputs: (number | null)[] = [null, ...ids];
    for (let t = 0; t < targets.length; t++) {
      hPrev = this.stepHidden(inputs[t], hPrev);
      hiddens.push(hPrev);
    }

    const gEmb = zeros(v, e);
    const gWx = zeros(h, e);
    const gWh = zeros(h, h);
    const gBh = new Array<number>(h).fill(0);
    const gWo = zeros(v, h);
    const gBo = new Array<number>(v).fill(0);

    const scale = 1 / targets.length;
    let dhNext = new Array<number>(h).fill(0);
    for (let t = targets.length - 1; t >= 0; t--) {
      const hid = hiddens[t];
      const lp = this.logProbs(hid);
      const dh = [...dhNext];
      for (let k = 0; k < v; k++) {
        const d = (Math.exp(lp[k]) - (k === targets[t] ? 1 : 0)) * scale;
        gBo[k] += d;
        const row = this.wo[k];
        const gRow = gWo[k];
        for (let j = 0; j < h; j++) {
          gRow[j] += d * hid[j];
          dh[j] += d * row[j];
        }
      }
      const prev = t > 0 ? hiddens[t - 1] : new Array<number>(h).fill(0);
      const dpre = new Array<number>(h);
      for (let i = 0; i < h; i++) dpre[i] = dh[i] * (1 - hid[i] * hid[i]);
      dhNext = new Array<number>(h).fill(0);
      for (let i = 0; i < h; i++) {
        gBh[i] += dpre[i];
        const rowWh = this.wh[i];
        const gRowWh = gWh[i];
        for (let j = 0; j < h; j++) {
          gRowWh[j] += dpre[i] * prev[j];
          dhNext[j] += dpre[i] * rowWh[j];
        }
        const input = inputs[t];
        if (input !== null) {
          const x = this.emb[input];
          const rowWx = this.wx[i];
          const gRowWx = gWx[i];
          const gEmbRow = gEmb[input];
          for (let j = 0; j < e; j++) {
            gRowWx[j] += dpre[i] * x[j];
            gEmbRow[j] += dpre[i] * rowWx[j];
          }
        }
      }
    }

    // global norm clip at 5, then plain SGD
    let sq = 0;
    const mats: [Matrix, Matrix][] = [
      [this.emb, gEmb], [this.wx, gWx], [this.wh, gWh], [this.wo, gWo],
    ];
    const vecs: [number[], number[]][] = [[this.bh, gBh], [this.bo, gBo]];
    for (const [, g] of mats) for (const row of g) for (const x of row) sq += x * x;
    for (const [, g] of vecs) for (const x of g) sq += x * x;
    const norm = Math.sqrt(sq);
    const lr = this.cfg.learningRate * (norm > 5 ? 5 / norm : 1);
    for (const [p, g] of mats) {
      for (let i = 0; i < p.length; i++) {
        for (let j = 0; j < p[i].length; j++) p[i][j] -= lr * g[i][j];
      }
    }
    for (const [p, g] of vecs) {
      for (let i = 0; i < p.length; i++) p[i] -= lr * g[i];
    }
  }

  /** Total ln-probability of a space-separated sentence (plus end term). */
  scoreSentence(text: string): number {
    if (!this.ready) throw new Error("model is not loaded yet");
    const ids = text.split(/\s+/).filter((w) => w.length > 0).map((w) => this.lookup(w));
    const targets = [...ids, this.index.get(END)!];
    const inputs: (number | null)[] = [null, ...ids];
    let hidden = new Array<number>(this.cfg.hiddenDim).fill(0);
    let total = 0;
    for (let t = 0; t < targets.length; t++) {
      hidden = this.stepHidden(inputs[t], hidden);
      total += this.logProbs(hidden)[targets[t]];
    }
    return total;
  }
}
