export { parseSMILES } from "./smiles.js";
export { Atom, Bond, Molecule, SmilesError } from "./types.js";
export {
  computeDescriptorRow,
  DESCRIPTOR_CATALOGUE,
  DESCRIPTOR_NAMES,
  EXCLUDED_DESCRIPTORS,
} from "./descriptors.js";
export {
  ArtifactError,
  atomFeatures,
  extractLatent,
  loadArtifact,
  MpnnArtifact,
  ATOM_FEATURE_DIM,
} from "./mpnn.js";
export {
  emitFeatures,
  featurizeBatch,
  FeatureManifest,
  writeOutputs,
} from "./emit.js";
