// Batch featurization and CSV emission in the modelling package's schema:
// header `id`, descriptor columns prefixed `f_`, latent columns prefixed
// `f_mpnn_`, optional unprefixed target columns. Unparseable molecules go
// to a separate rejects report, never into the feature table.

import { writeFileSync } from "node:fs";

import {
  computeDescriptorRow,
  DESCRIPTOR_NAMES,
  EXCLUDED_DESCRIPTORS,
} from "./descriptors.js";
import { extractLatent, MpnnArtifact } from "./mpnn.js";
import { parseSMILES } from "./smiles.js";
import { SmilesError } from "./types.js";

export interface FeatureManifest {
  descriptors: string[];
  excluded: string[];
  latentDim: number;
  modelFingerprint: string;
  moleculeCount: number;
  rejectCount: number;
}

export interface Reject {
  id: string;
  smiles: string;
  reason: string;
}

export interface FeaturizeResult {
  ids: string[];
  descriptorRows: number[][];
  latentRows: number[][];
  manifest: FeatureManifest;
  rejects: Reject[];
}

export function featurizeBatch(
  entries: { id: string; smiles: string }[],
  model: MpnnArtifact
): FeaturizeResult {
  const ids: string[] = [];
  const descriptorRows: number[][] = [];
  const latentRows: number[][] = [];
  const rejects: Reject[] = [];

  for (const entry of entries) {
    try {
      const mol = parseSMILES(entry.smiles);
      descriptorRows.push(computeDescriptorRow(mol));
      latentRows.push(extractLatent(mol, model));
      ids.push(entry.id);
    } catch (err) {
      if (err instanceof SmilesError) {
        rejects.push({ id: entry.id, smiles: entry.smiles, reason: err.message });
      } else {
        throw err;
      }
    }
  }
  if (ids.length === 0) {
    throw new Error("no parseable molecules in the input");
  }
  return {
    ids,
    descriptorRows,
    latentRows,
    rejects,
    manifest: {
      descriptors: [...DESCRIPTOR_NAMES],
      excluded: [...EXCLUDED_DESCRIPTORS],
      latentDim: model.hiddenDim,
      modelFingerprint: model.fingerprint,
      moleculeCount: ids.length,
      rejectCount: rejects.length,
    },
  };
}

function formatNumber(x: number): string {
  if (!Number.isFinite(x)) {
    // the modelling side drops non-finite feature columns; emit the token
    return Number.isNaN(x) ? "nan" : x > 0 ? "inf" : "-inf";
  }
  return String(x);
}

function csvEscape(cell: string): string {
  return /[",\n]/.test(cell) ? `"${cell.replace(/"/g, '""')}"` : cell;
}

export function emitFeatures(
  descriptorRows: number[][],
  latentRows: number[][],
  ids: string[],
  options: {
    descriptorNames?: string[];
    targets?: Record<string, (number | null)[]>;
  } = {}
): string {
  if (descriptorRows.length !== ids.length || latentRows.length !== ids.length) {
    throw new Error(
      `row count mismatch: ${ids.length} ids, ${descriptorRows.length} descriptor rows, ` +
      `${latentRows.length} latent rows`
    );
  }
  const descriptorNames = options.descriptorNames ?? DESCRIPTOR_NAMES;
  const latentDim = latentRows[0]?.length ?? 0;
  const targets = options.targets ?? {};
  for (const [name, values] of Object.entries(targets)) {
    if (values.length !== ids.length) {
      throw new Error(`target ${name} has ${values.length} values for ${ids.length} rows`);
    }
  }

  const header = [
    "id",
    ...descriptorNames.map((n) => `f_${n}`),
    ...Array.from({ length: latentDim }, (_, j) => `f_mpnn_${j}`),
    ...Object.keys(targets),
  ];
  const lines = [header.join(",")];
  ids.forEach((id, row) => {
    const cells = [
      csvEscape(id),
      ...descriptorRows[row].map(formatNumber),
      ...latentRows[row].map(formatNumber),
      ...Object.values(targets).map((values) =>
        values[row] === null ? "" : formatNumber(values[row] as number)
      ),
    ];
    lines.push(cells.join(","));
  });
  return lines.join("\n") + "\n";
}

export function writeOutputs(outPath: string, result: FeaturizeResult): void {
  writeFileSync(outPath, emitFeatures(result.descriptorRows, result.latentRows, result.ids));
  writeFileSync(
    `${outPath}.manifest.json`,
    JSON.stringify(result.manifest, null, 2) + "\n"
  );
  const rejectLines = ["id,smiles,reason"];
  for (const reject of result.rejects) {
    rejectLines.push(
      [reject.id, reject.smiles, reject.reason].map(csvEscape).join(",")
    );
  }
  writeFileSync(`${outPath}.rejects.csv`, rejectLines.join("\n") + "\n");
}
