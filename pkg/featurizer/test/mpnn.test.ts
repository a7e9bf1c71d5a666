import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { atomFeatures, extractLatent, loadArtifact, ArtifactError, ATOM_FEATURE_DIM } from "../src/mpnn.js";
import { parseSMILES } from "../src/smiles.js";
import { makeArtifact } from "../tools/make-model.js";

const FIXTURE = join(__dirname, "..", "fixtures", "mpnn-tiny.json");

const PROBE_SMILES = [
  "c1ccccc1", "CCO", "CC(=O)O", "c1ccc2ccccc2c1", "C1CCCCC1",
  "CN1C=NC2=C1C(=O)N(C(=O)N2C)C", "[NH4+]", "O=S(=O)(N)c1ccccc1",
  "CC(C)Cc1ccc(cc1)C(C)C(=O)O", "Clc1ccccc1",
];

describe("mpnn latent extraction", () => {
  it("latent width equals the model hidden dimension on a 10-molecule probe", () => {
    const model = loadArtifact(FIXTURE);
    for (const smiles of PROBE_SMILES) {
      const latent = extractLatent(parseSMILES(smiles), model);
      expect(latent).toHaveLength(model.hiddenDim);
      expect(latent.every(Number.isFinite)).toBe(true);
    }
  });

  it("is deterministic: the same molecule gives identical latents", () => {
    const model = loadArtifact(FIXTURE);
    const a = extractLatent(parseSMILES("CC(=O)Oc1ccccc1C(=O)O"), model);
    const b = extractLatent(parseSMILES("CC(=O)Oc1ccccc1C(=O)O"), model);
    expect(a).toEqual(b);
  });

  it("keeps regularization-dead channels as all-zero latent columns", () => {
    const model = loadArtifact(FIXTURE);
    const dead = model.hiddenDim - 1; // zeroed by the fixture generator
    for (const smiles of PROBE_SMILES) {
      const latent = extractLatent(parseSMILES(smiles), model);
      expect(latent[dead]).toBe(0);
    }
  });

  it("records the source model fingerprint", () => {
    const model = loadArtifact(FIXTURE);
    expect(model.fingerprint).toMatch(/^[0-9a-f]{64}$/);
  });

  it("atom features have the declared fixed width", () => {
    const mol = parseSMILES("O=S(=O)(N)c1ccccc1");
    for (const features of atomFeatures(mol)) {
      expect(features).toHaveLength(ATOM_FEATURE_DIM);
    }
  });

  it("rejects artifacts with the wrong shape or version", () => {
    const dir = mkdtempSync(join(tmpdir(), "mpnn-"));
    const badVersion = { ...makeArtifact(), version: 99 };
    const versionPath = join(dir, "bad-version.json");
    writeFileSync(versionPath, JSON.stringify(badVersion));
    expect(() => loadArtifact(versionPath)).toThrow(ArtifactError);

    const badShape = makeArtifact();
    (badShape.wIn as number[][]).pop();
    const shapePath = join(dir, "bad-shape.json");
    writeFileSync(shapePath, JSON.stringify(badShape));
    expect(() => loadArtifact(shapePath)).toThrow(/wIn/);

    expect(() => loadArtifact(join(dir, "missing.json"))).toThrow(/not found/);
  });
});
