// General-purpose molecular descriptors computed on the parsed graph.
//
// Ipc and Kappa3 are catalogued but never emitted: Ipc grows past 1e30 on
// large molecules and Kappa3 divides by the (often tiny) three-bond path
// count, so both can produce extreme values that wreck downstream scaling.

import { degrees, distanceMatrix, ringAtomFlags, ringBondFlags, ringCount } from "./graph.js";
import { Molecule } from "./types.js";

export const EXCLUDED_DESCRIPTORS = ["Ipc", "Kappa3"] as const;

const ATOMIC_MASSES: Record<string, number> = {
  H: 1.008, B: 10.811, C: 12.011, N: 14.007, O: 15.999, F: 18.998,
  Si: 28.086, P: 30.974, S: 32.065, Cl: 35.453, Se: 78.971, Br: 79.904,
  I: 126.904,
};

const HALOGENS = new Set(["F", "Cl", "Br", "I"]);

type DescriptorFn = (mol: Molecule) => number;

function heavyDegrees(mol: Molecule): number[] {
  return degrees(mol);
}

function bondOrderSums(mol: Molecule): number[] {
  const sums = new Array<number>(mol.atoms.length).fill(0);
  for (const bond of mol.bonds) {
    sums[bond.atom1] += bond.order;
    sums[bond.atom2] += bond.order;
  }
  return sums;
}

function pathCounts2(mol: Molecule): number {
  // paths of length two = sum over atoms of C(degree, 2)
  return heavyDegrees(mol).reduce((acc, d) => acc + (d * (d - 1)) / 2, 0);
}

export const DESCRIPTOR_CATALOGUE: Record<string, DescriptorFn> = {
  MolWt: (mol) =>
    mol.atoms.reduce(
      (acc, atom) =>
        acc + (ATOMIC_MASSES[atom.element] ?? 0) + atom.hydrogens * ATOMIC_MASSES.H,
      0
    ),
  HeavyAtomCount: (mol) => mol.atoms.length,
  NumHydrogens: (mol) => mol.atoms.reduce((acc, a) => acc + a.hydrogens, 0),
  NumBonds: (mol) => mol.bonds.length,
  NumRings: (mol) => ringCount(mol),
  NumAromaticAtoms: (mol) => mol.atoms.filter((a) => a.aromatic).length,
  NumHeteroatoms: (mol) =>
    mol.atoms.filter((a) => a.element !== "C" && a.element !== "H").length,
  NumHalogens: (mol) => mol.atoms.filter((a) => HALOGENS.has(a.element)).length,
  NumHDonors: (mol) =>
    mol.atoms.filter(
      (a) => (a.element === "N" || a.element === "O") && a.hydrogens > 0
    ).length,
  NumHAcceptors: (mol) =>
    mol.atoms.filter((a) => a.element === "N" || a.element === "O").length,
  NetCharge: (mol) => mol.atoms.reduce((acc, a) => acc + a.charge, 0),
  NumRotatableBonds: (mol) => {
    const inRing = ringBondFlags(mol);
    const deg = heavyDegrees(mol);
    return mol.bonds.filter(
      (b, k) =>
        b.order === 1 && !inRing[k] && deg[b.atom1] > 1 && deg[b.atom2] > 1
    ).length;
  },
  FractionCSP3: (mol) => {
    const carbons = mol.atoms.filter((a) => a.element === "C");
    if (carbons.length === 0) return 0;
    const sums = bondOrderSums(mol);
    const deg = heavyDegrees(mol);
    const sp3 = carbons.filter(
      (a) => !a.aromatic && sums[a.id] === deg[a.id]  // only single bonds
    );
    return sp3.length / carbons.length;
  },
  Chi0: (mol) =>
    heavyDegrees(mol).reduce((acc, d) => acc + (d > 0 ? 1 / Math.sqrt(d) : 0), 0),
  Chi1: (mol) => {
    const deg = heavyDegrees(mol);
    return mol.bonds.reduce(
      (acc, b) => acc + 1 / Math.sqrt(deg[b.atom1] * deg[b.atom2]),
      0
    );
  },
  Kappa1: (mol) => {
    const a = mol.atoms.length;
    const p1 = mol.bonds.length;
    return p1 > 0 ? (a * (a - 1) * (a - 1)) / (p1 * p1) : 0;
  },
  Kappa2: (mol) => {
    const a = mol.atoms.length;
    const p2 = pathCounts2(mol);
    return p2 > 0 ? ((a - 1) * (a - 2) * (a - 2)) / (p2 * p2) : 0;
  },
  WienerIndex: (mol) => {
    const dist = distanceMatrix(mol);
    let total = 0;
    for (let i = 0; i < dist.length; i++) {
      for (let j = i + 1; j < dist.length; j++) {
        if (Number.isFinite(dist[i][j])) total += dist[i][j];
      }
    }
    return total;
  },
  ZagrebIndex: (mol) => heavyDegrees(mol).reduce((acc, d) => acc + d * d, 0),
  NumRingAtoms: (mol) => ringAtomFlags(mol).filter(Boolean).length,
};

export const DESCRIPTOR_NAMES = Object.keys(DESCRIPTOR_CATALOGUE);

export interface DescriptorRow {
  values: number[];
}

/** Compute every catalogued (non-excluded) descriptor for one molecule. */
export function computeDescriptorRow(mol: Molecule): number[] {
  return DESCRIPTOR_NAMES.map((name) => DESCRIPTOR_CATALOGUE[name](mol));
}
