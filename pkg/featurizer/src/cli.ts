#!/usr/bin/env node
// featurize --smiles <file> --mpnn <model> --out <csv>
//
// The SMILES file holds one molecule per line: "SMILES [id]" (whitespace
// separated; '#' starts a comment). Output: the feature CSV, a manifest at
// <out>.manifest.json, and rejected molecules at <out>.rejects.csv.

import { readFileSync } from "node:fs";
import { resolve } from "node:path";
import process from "node:process";
import { fileURLToPath } from "node:url";

import { featurizeBatch, writeOutputs } from "./emit.js";
import { loadArtifact } from "./mpnn.js";

function usage(): never {
  console.error("usage: featurize --smiles <file> --mpnn <model.json> --out <csv>");
  process.exit(1);
}

export function readSmilesFile(path: string): { id: string; smiles: string }[] {
  const entries: { id: string; smiles: string }[] = [];
  const text = readFileSync(path, "utf-8");
  text.split(/\r?\n/).forEach((line, index) => {
    const body = line.split("#", 1)[0].trim();
    if (!body) return;
    const [smiles, id] = body.split(/\s+/);
    entries.push({ id: id ?? `mol${index + 1}`, smiles });
  });
  return entries;
}

export function main(argv: string[]): number {
  const args = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    if (!argv[i].startsWith("--") || argv[i + 1] === undefined) usage();
    args.set(argv[i].slice(2), argv[i + 1]);
  }
  const smilesPath = args.get("smiles");
  const modelPath = args.get("mpnn");
  const outPath = args.get("out");
  if (!smilesPath || !modelPath || !outPath) usage();

  try {
    const entries = readSmilesFile(smilesPath);
    const model = loadArtifact(modelPath);
    const result = featurizeBatch(entries, model);
    writeOutputs(outPath, result);
    console.error(
      `featurized ${result.ids.length} molecule(s), ` +
      `${result.manifest.descriptors.length} descriptors + ` +
      `${result.manifest.latentDim} latent dims, ` +
      `${result.rejects.length} reject(s)`
    );
    return 0;
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

if (process.argv[1] && fileURLToPath(import.meta.url) === resolve(process.argv[1])) {
  process.exit(main(process.argv.slice(2)));
}
