import { describe, expect, it } from "vitest";

import { emitFeatures, featurizeBatch } from "../src/emit.js";
import { loadArtifact } from "../src/mpnn.js";
import { join } from "node:path";

const FIXTURE = join(__dirname, "..", "fixtures", "mpnn-tiny.json");

describe("emitFeatures", () => {
  it("writes id plus 3 descriptor and 4 latent columns for 5 molecules", () => {
    const descriptorRows = Array.from({ length: 5 }, (_, i) => [i, i + 1, i + 2]);
    const latentRows = Array.from({ length: 5 }, (_, i) => [0, i, 2 * i, 3 * i]);
    const ids = ["a", "b", "c", "d", "e"];
    const csv = emitFeatures(descriptorRows, latentRows, ids, {
      descriptorNames: ["d0", "d1", "d2"],
    });
    const lines = csv.trim().split("\n");
    expect(lines).toHaveLength(6);
    expect(lines[0]).toBe("id,f_d0,f_d1,f_d2,f_mpnn_0,f_mpnn_1,f_mpnn_2,f_mpnn_3");
    expect(lines[1]).toBe("a,0,1,2,0,0,0,0");
  });

  it("appends unprefixed target columns with empty cells for missing", () => {
    const csv = emitFeatures([[1], [2]], [[0.5], [0.25]], ["a", "b"], {
      descriptorNames: ["x"],
      targets: { y: [1.5, null] },
    });
    const lines = csv.trim().split("\n");
    expect(lines[0]).toBe("id,f_x,f_mpnn_0,y");
    expect(lines[1]).toBe("a,1,0.5,1.5");
    expect(lines[2]).toBe("b,2,0.25,");
  });

  it("rejects mismatched row counts", () => {
    expect(() => emitFeatures([[1]], [[1], [2]], ["a"])).toThrow(/mismatch/);
    expect(() =>
      emitFeatures([[1]], [[1]], ["a"], { targets: { y: [1, 2] } })
    ).toThrow(/2 values for 1 rows/);
  });

  it("round-trips numbers through text exactly", () => {
    const values = [[Math.PI, 1e-17, 123456.789]];
    const csv = emitFeatures(values, [[0.1 + 0.2]], ["m"], {
      descriptorNames: ["a", "b", "c"],
    });
    const cells = csv.trim().split("\n")[1].split(",").slice(1).map(Number);
    expect(cells[0]).toBe(Math.PI);
    expect(cells[1]).toBe(1e-17);
    expect(cells[2]).toBe(123456.789);
    expect(cells[3]).toBe(0.1 + 0.2);
  });
});

describe("featurizeBatch", () => {
  it("separates rejects from featurized molecules", () => {
    const model = loadArtifact(FIXTURE);
    const result = featurizeBatch(
      [
        { id: "ok1", smiles: "CCO" },
        { id: "bad", smiles: "C1CC" },
        { id: "ok2", smiles: "c1ccccc1" },
      ],
      model
    );
    expect(result.ids).toEqual(["ok1", "ok2"]);
    expect(result.rejects).toHaveLength(1);
    expect(result.rejects[0].id).toBe("bad");
    expect(result.rejects[0].reason).toMatch(/unclosed ring/);
    expect(result.manifest.excluded).toEqual(["Ipc", "Kappa3"]);
    expect(result.manifest.latentDim).toBe(model.hiddenDim);
    expect(result.manifest.rejectCount).toBe(1);
  });

  it("fails when nothing parses", () => {
    const model = loadArtifact(FIXTURE);
    expect(() => featurizeBatch([{ id: "x", smiles: "%%" }], model)).toThrow(
      /no parseable molecules/
    );
  });
});
