// SMILES parser covering the organic subset, bracket atoms, branches,
// ring-closure digits (including %nn), and aromatic lowercase symbols.
// Stereo markers (/ \ @) are accepted and ignored. Aromaticity is taken
// from the input notation; kekulized inputs stay as alternating bonds.

import { Atom, Bond, BondOrder, Molecule, SmilesError } from "./types.js";

const ORGANIC_SUBSET = ["Br", "Cl", "B", "C", "N", "O", "P", "S", "F", "I"];
const AROMATIC_SUBSET = ["b", "c", "n", "o", "p", "s"];

// Smallest standard valences; larger alternatives for hypervalent S/P/N.
const DEFAULT_VALENCES: Record<string, number[]> = {
  B: [3],
  C: [4],
  N: [3, 5],
  O: [2],
  P: [3, 5],
  S: [2, 4, 6],
  F: [1],
  Cl: [1],
  Br: [1],
  I: [1],
};

const BOND_ORDERS: Record<string, BondOrder> = {
  "-": 1,
  "=": 2,
  "#": 3,
  ":": 1.5,
  "/": 1,
  "\\": 1,
};

interface PendingRing {
  atom: number;
  order: BondOrder | null;
  aromatic: boolean;
}

export function parseSMILES(smiles: string): Molecule {
  const text = smiles.trim();
  if (!text) {
    throw new SmilesError(smiles, "empty string");
  }

  const atoms: Atom[] = [];
  const bonds: Bond[] = [];
  const branchStack: number[] = [];
  const rings = new Map<number, PendingRing>();

  let previous = -1;
  let pendingOrder: BondOrder | null = null;
  let pendingAromatic = false;
  let i = 0;

  const addAtom = (atom: Omit<Atom, "id">): number => {
    const id = atoms.length;
    atoms.push({ id, ...atom });
    if (previous >= 0) {
      const aromatic =
        pendingOrder === 1.5 ||
        (pendingOrder === null && atoms[previous].aromatic && atom.aromatic);
      bonds.push({
        atom1: previous,
        atom2: id,
        order: pendingOrder ?? (aromatic ? 1.5 : 1),
        aromatic,
      });
    }
    previous = id;
    pendingOrder = null;
    pendingAromatic = false;
    return id;
  };

  const closeRing = (label: number) => {
    if (previous < 0) {
      throw new SmilesError(smiles, `ring closure ${label} before any atom`);
    }
    const open = rings.get(label);
    if (!open) {
      rings.set(label, { atom: previous, order: pendingOrder, aromatic: pendingAromatic });
      pendingOrder = null;
      pendingAromatic = false;
      return;
    }
    rings.delete(label);
    if (open.atom === previous) {
      throw new SmilesError(smiles, `ring closure ${label} bonds an atom to itself`);
    }
    const order = pendingOrder ?? open.order;
    const aromatic =
      order === 1.5 ||
      (order === null && atoms[open.atom].aromatic && atoms[previous].aromatic);
    bonds.push({
      atom1: open.atom,
      atom2: previous,
      order: order ?? (aromatic ? 1.5 : 1),
      aromatic,
    });
    pendingOrder = null;
    pendingAromatic = false;
  };

  while (i < text.length) {
    const ch = text[i];

    if (ch === "(") {
      if (previous < 0) throw new SmilesError(smiles, "branch before any atom");
      branchStack.push(previous);
      i += 1;
      continue;
    }
    if (ch === ")") {
      const back = branchStack.pop();
      if (back === undefined) throw new SmilesError(smiles, "unbalanced ')'");
      previous = back;
      i += 1;
      continue;
    }
    if (ch in BOND_ORDERS) {
      pendingOrder = BOND_ORDERS[ch];
      pendingAromatic = ch === ":";
      i += 1;
      continue;
    }
    if (ch >= "0" && ch <= "9") {
      closeRing(Number(ch));
      i += 1;
      continue;
    }
    if (ch === "%") {
      const label = text.slice(i + 1, i + 3);
      if (!/^\d\d$/.test(label)) {
        throw new SmilesError(smiles, `bad ring label after '%' at position ${i}`);
      }
      closeRing(Number(label));
      i += 3;
      continue;
    }
    if (ch === "[") {
      const end = text.indexOf("]", i);
      if (end < 0) throw new SmilesError(smiles, "unterminated bracket atom");
      addAtom(parseBracketAtom(smiles, text.slice(i + 1, end)));
      i = end + 1;
      continue;
    }
    if (ch === ".") {
      // disconnected component separator
      previous = -1;
      pendingOrder = null;
      i += 1;
      continue;
    }

    const organic = matchOrganic(text, i);
    if (organic) {
      const [symbol, aromatic] = organic;
      addAtom({
        element: symbol,
        aromatic,
        charge: 0,
        isotope: 0,
        hydrogens: 0,
        explicitH: false,
      });
      i += symbol.length;
      continue;
    }
    throw new SmilesError(smiles, `unexpected character ${JSON.stringify(ch)} at position ${i}`);
  }

  if (branchStack.length > 0) throw new SmilesError(smiles, "unbalanced '('");
  if (rings.size > 0) {
    const open = [...rings.keys()].join(", ");
    throw new SmilesError(smiles, `unclosed ring label(s): ${open}`);
  }
  if (atoms.length === 0) throw new SmilesError(smiles, "no atoms");

  assignImplicitHydrogens(smiles, atoms, bonds);
  return { smiles: text, atoms, bonds };
}

function matchOrganic(text: string, i: number): [string, boolean] | null {
  for (const two of ["Br", "Cl"]) {
    if (text.startsWith(two, i)) return [two, false];
  }
  const ch = text[i];
  if (ORGANIC_SUBSET.includes(ch)) return [ch, false];
  if (AROMATIC_SUBSET.includes(ch)) {
    return [ch.toUpperCase(), true];
  }
  return null;
}

function parseBracketAtom(smiles: string, body: string): Omit<Atom, "id"> {
  const match = body.match(
    /^(\d*)([A-Z][a-z]?|[a-z])(@{0,2})(H\d*)?([+-]\d*|[+]+|[-]+)?$/
  );
  if (!match) {
    throw new SmilesError(smiles, `bad bracket atom [${body}]`);
  }
  const [, isotopeText, symbolText, , hText, chargeText] = match;
  const aromatic = symbolText === symbolText.toLowerCase();
  const element = aromatic
    ? symbolText.charAt(0).toUpperCase() + symbolText.slice(1)
    : symbolText;
  let hydrogens = 0;
  if (hText) {
    hydrogens = hText === "H" ? 1 : Number(hText.slice(1));
  }
  let charge = 0;
  if (chargeText) {
    if (/^\++$/.test(chargeText)) charge = chargeText.length;
    else if (/^-+$/.test(chargeText)) charge = -chargeText.length;
    else charge = Number(chargeText[0] + (chargeText.slice(1) || "1"));
  }
  return {
    element,
    aromatic,
    charge,
    isotope: isotopeText ? Number(isotopeText) : 0,
    hydrogens,
    explicitH: true,
  };
}

// Implicit hydrogens for organic-subset atoms: the smallest standard valence
// that covers the rounded-up bond-order sum, minus that sum. Bracket atoms
// keep their explicit count.
function assignImplicitHydrogens(smiles: string, atoms: Atom[], bonds: Bond[]): void {
  const orderSum = new Array<number>(atoms.length).fill(0);
  for (const bond of bonds) {
    orderSum[bond.atom1] += bond.order;
    orderSum[bond.atom2] += bond.order;
  }
  for (const atom of atoms) {
    if (atom.explicitH) continue;
    const valences = DEFAULT_VALENCES[atom.element];
    if (!valences) {
      throw new SmilesError(smiles, `element ${atom.element} needs a bracket atom`);
    }
    const used = Math.ceil(orderSum[atom.id]);
    const valence = valences.find((v) => v >= used);
    atom.hydrogens = valence === undefined ? 0 : valence - used;
  }
}
