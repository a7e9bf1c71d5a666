// Core molecular graph types shared across the featurizer.

export interface Atom {
  /** Index into the molecule's atom array. */
  id: number;
  /** Element symbol with standard capitalization (e.g. "Cl"). */
  element: string;
  /** True when written lowercase / flagged aromatic in the SMILES. */
  aromatic: boolean;
  /** Formal charge from a bracket atom, 0 otherwise. */
  charge: number;
  /** Isotope mass number from a bracket atom, 0 when unspecified. */
  isotope: number;
  /** Hydrogen count: explicit for bracket atoms, implicit otherwise. */
  hydrogens: number;
  /** True when the hydrogen count came from a bracket spec. */
  explicitH: boolean;
}

export type BondOrder = 1 | 2 | 3 | 1.5;

export interface Bond {
  atom1: number;
  atom2: number;
  order: BondOrder;
  aromatic: boolean;
}

export interface Molecule {
  smiles: string;
  atoms: Atom[];
  bonds: Bond[];
}

export class SmilesError extends Error {
  constructor(smiles: string, reason: string) {
    super(`cannot parse ${JSON.stringify(smiles)}: ${reason}`);
    this.name = "SmilesError";
  }
}
