// Generate a deterministic message-passing model artifact for tests and
// demos. A few hidden channels are zeroed out on purpose: regularized
// training commonly kills channels, and downstream consumers must cope with
// all-zero latent columns.

import { writeFileSync } from "node:fs";
import { resolve } from "node:path";
import process from "node:process";
import { fileURLToPath } from "node:url";

import { ARTIFACT_FORMAT, ARTIFACT_VERSION, ATOM_FEATURE_DIM } from "../src/mpnn.js";

// mulberry32: tiny deterministic PRNG, good enough for weight noise
function mulberry32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function makeArtifact(options: {
  hiddenDim?: number;
  messageSteps?: number;
  seed?: number;
  deadChannels?: number[];
} = {}) {
  const hiddenDim = options.hiddenDim ?? 12;
  const messageSteps = options.messageSteps ?? 3;
  const seed = options.seed ?? 42;
  const deadChannels = options.deadChannels ?? [hiddenDim - 1];
  const rand = mulberry32(seed);
  const noise = (scale: number) => (rand() * 2 - 1) * scale;

  const matrix = (rows: number, cols: number, scale: number) =>
    Array.from({ length: rows }, () =>
      Array.from({ length: cols }, () => noise(scale))
    );
  const vector = (length: number, scale: number) =>
    Array.from({ length }, () => noise(scale));

  const wIn = matrix(ATOM_FEATURE_DIM, hiddenDim, 0.8);
  const wSelf = matrix(hiddenDim, hiddenDim, 0.4);
  const wMsg = matrix(hiddenDim, hiddenDim, 0.4);
  const bIn = vector(hiddenDim, 0.2);
  const bStep = vector(hiddenDim, 0.2);

  for (const dead of deadChannels) {
    for (const row of wIn) row[dead] = 0;
    for (const row of wSelf) row[dead] = 0;
    for (const row of wMsg) row[dead] = 0;
    bIn[dead] = 0;
    bStep[dead] = 0;
  }

  return {
    format: ARTIFACT_FORMAT,
    version: ARTIFACT_VERSION,
    hiddenDim,
    messageSteps,
    atomFeatureDim: ATOM_FEATURE_DIM,
    wIn,
    bIn,
    wSelf,
    wMsg,
    bStep,
  };
}

if (process.argv[1] && fileURLToPath(import.meta.url) === resolve(process.argv[1])) {
  const outPath = process.argv[2] ?? "fixtures/mpnn-tiny.json";
  writeFileSync(outPath, JSON.stringify(makeArtifact(), null, 1) + "\n");
  console.error(`wrote ${outPath}`);
}
