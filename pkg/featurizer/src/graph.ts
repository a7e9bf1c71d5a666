// Graph utilities over the heavy-atom skeleton: adjacency, connectivity,
// ring membership, and all-pairs shortest paths (BFS; bonds are unweighted).

import { Molecule } from "./types.js";

export function adjacency(mol: Molecule): number[][] {
  const adj: number[][] = mol.atoms.map(() => []);
  for (const bond of mol.bonds) {
    adj[bond.atom1].push(bond.atom2);
    adj[bond.atom2].push(bond.atom1);
  }
  return adj;
}

export function degrees(mol: Molecule): number[] {
  return adjacency(mol).map((neighbors) => neighbors.length);
}

export function connectedComponents(mol: Molecule): number {
  const adj = adjacency(mol);
  const seen = new Array<boolean>(mol.atoms.length).fill(false);
  let components = 0;
  for (let start = 0; start < mol.atoms.length; start++) {
    if (seen[start]) continue;
    components += 1;
    const queue = [start];
    seen[start] = true;
    while (queue.length) {
      const v = queue.pop()!;
      for (const u of adj[v]) {
        if (!seen[u]) {
          seen[u] = true;
          queue.push(u);
        }
      }
    }
  }
  return components;
}

/** Circuit rank: bonds - atoms + components (SSSR ring count). */
export function ringCount(mol: Molecule): number {
  return mol.bonds.length - mol.atoms.length + connectedComponents(mol);
}

/** A bond is in a ring iff its endpoints stay connected without it. */
export function ringBondFlags(mol: Molecule): boolean[] {
  return mol.bonds.map((bond, skip) => {
    const adj: number[][] = mol.atoms.map(() => []);
    mol.bonds.forEach((b, k) => {
      if (k === skip) return;
      adj[b.atom1].push(b.atom2);
      adj[b.atom2].push(b.atom1);
    });
    const seen = new Array<boolean>(mol.atoms.length).fill(false);
    const queue = [bond.atom1];
    seen[bond.atom1] = true;
    while (queue.length) {
      const v = queue.pop()!;
      if (v === bond.atom2) return true;
      for (const u of adj[v]) {
        if (!seen[u]) {
          seen[u] = true;
          queue.push(u);
        }
      }
    }
    return false;
  });
}

export function ringAtomFlags(mol: Molecule): boolean[] {
  const flags = new Array<boolean>(mol.atoms.length).fill(false);
  ringBondFlags(mol).forEach((inRing, k) => {
    if (inRing) {
      flags[mol.bonds[k].atom1] = true;
      flags[mol.bonds[k].atom2] = true;
    }
  });
  return flags;
}

/** BFS distance matrix; unreachable pairs stay at Infinity. */
export function distanceMatrix(mol: Molecule): number[][] {
  const adj = adjacency(mol);
  const n = mol.atoms.length;
  return mol.atoms.map((_, start) => {
    const dist = new Array<number>(n).fill(Infinity);
    dist[start] = 0;
    const queue = [start];
    let head = 0;
    while (head < queue.length) {
      const v = queue[head++];
      for (const u of adj[v]) {
        if (dist[u] === Infinity) {
          dist[u] = dist[v] + 1;
          queue.push(u);
        }
      }
    }
    return dist;
  });
}
