// Latent-feature extraction from a trained message-passing model artifact.
//
// The artifact is a JSON file holding the message-passing weights with the
// prediction head already removed. A forward pass embeds each atom from its
// local features, runs a fixed number of neighbor-sum message steps, and
// sum-pools atom states into one latent vector per molecule.

import { createHash } from "node:crypto";
import { readFileSync } from "node:fs";

import { adjacency, degrees, ringAtomFlags } from "./graph.js";
import { Molecule } from "./types.js";

export const ARTIFACT_FORMAT = "mpnn-featurizer";
export const ARTIFACT_VERSION = 1;

// Fixed atom-feature layout; the artifact must declare the same one.
export const ELEMENT_CHANNELS = ["C", "N", "O", "S", "P", "F", "Cl", "Br", "I", "B"] as const;
export const ATOM_FEATURE_DIM = ELEMENT_CHANNELS.length + 6;

export interface MpnnArtifact {
  format: string;
  version: number;
  hiddenDim: number;
  messageSteps: number;
  atomFeatureDim: number;
  /** hex sha-256 of the artifact file, filled in at load time */
  fingerprint: string;
  wIn: number[][]; // atomFeatureDim x hiddenDim
  bIn: number[];
  wSelf: number[][]; // hiddenDim x hiddenDim
  wMsg: number[][]; // hiddenDim x hiddenDim
  bStep: number[];
}

export class ArtifactError extends Error {}

export function loadArtifact(path: string): MpnnArtifact {
  let raw: Buffer;
  try {
    raw = readFileSync(path);
  } catch {
    throw new ArtifactError(`model artifact not found: ${path}`);
  }
  let parsed: any;
  try {
    parsed = JSON.parse(raw.toString("utf-8"));
  } catch {
    throw new ArtifactError(`model artifact is not valid JSON: ${path}`);
  }
  if (parsed.format !== ARTIFACT_FORMAT) {
    throw new ArtifactError(`unexpected artifact format ${JSON.stringify(parsed.format)}`);
  }
  if (parsed.version !== ARTIFACT_VERSION) {
    throw new ArtifactError(`artifact version ${parsed.version}, expected ${ARTIFACT_VERSION}`);
  }
  if (parsed.atomFeatureDim !== ATOM_FEATURE_DIM) {
    throw new ArtifactError(
      `artifact expects ${parsed.atomFeatureDim} atom features, this build uses ${ATOM_FEATURE_DIM}`
    );
  }
  const hidden = parsed.hiddenDim;
  checkMatrix(parsed.wIn, ATOM_FEATURE_DIM, hidden, "wIn");
  checkMatrix(parsed.wSelf, hidden, hidden, "wSelf");
  checkMatrix(parsed.wMsg, hidden, hidden, "wMsg");
  if (parsed.bIn.length !== hidden || parsed.bStep.length !== hidden) {
    throw new ArtifactError("bias vector length does not match hiddenDim");
  }
  return {
    ...parsed,
    fingerprint: createHash("sha256").update(raw).digest("hex"),
  };
}

function checkMatrix(m: unknown, rows: number, cols: number, name: string): void {
  if (!Array.isArray(m) || m.length !== rows ||
      m.some((row) => !Array.isArray(row) || row.length !== cols)) {
    throw new ArtifactError(`weight ${name} must be ${rows}x${cols}`);
  }
}

/** Per-atom input features: element one-hot, degree, aromatic, charge,
 * hydrogen count, ring membership, isotope flag. */
export function atomFeatures(mol: Molecule): number[][] {
  const deg = degrees(mol);
  const inRing = ringAtomFlags(mol);
  return mol.atoms.map((atom) => {
    const oneHot = ELEMENT_CHANNELS.map((el) => (atom.element === el ? 1 : 0));
    return [
      ...oneHot,
      deg[atom.id] / 4,
      atom.aromatic ? 1 : 0,
      atom.charge,
      atom.hydrogens / 4,
      inRing[atom.id] ? 1 : 0,
      atom.isotope > 0 ? 1 : 0,
    ];
  });
}

const relu = (x: number) => (x > 0 ? x : 0);

function affine(x: number[], w: number[][], b: number[] | null): number[] {
  const out = b ? [...b] : new Array<number>(w[0].length).fill(0);
  for (let i = 0; i < x.length; i++) {
    const xi = x[i];
    if (xi === 0) continue;
    const row = w[i];
    for (let j = 0; j < out.length; j++) out[j] += xi * row[j];
  }
  return out;
}

/** One latent vector (length hiddenDim) per molecule; sum-pooled atoms. */
export function extractLatent(mol: Molecule, model: MpnnArtifact): number[] {
  const adj = adjacency(mol);
  let states = atomFeatures(mol).map((x) => affine(x, model.wIn, model.bIn).map(relu));
  for (let step = 0; step < model.messageSteps; step++) {
    const next: number[][] = [];
    for (let v = 0; v < states.length; v++) {
      const message = new Array<number>(model.hiddenDim).fill(0);
      for (const u of adj[v]) {
        const h = states[u];
        for (let j = 0; j < message.length; j++) message[j] += h[j];
      }
      const self = affine(states[v], model.wSelf, model.bStep);
      const passed = affine(message, model.wMsg, null);
      next.push(self.map((s, j) => relu(s + passed[j])));
    }
    states = next;
  }
  const latent = new Array<number>(model.hiddenDim).fill(0);
  for (const h of states) {
    for (let j = 0; j < latent.length; j++) latent[j] += h[j];
  }
  return latent;
}
