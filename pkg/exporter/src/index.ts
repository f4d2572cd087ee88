export { FeatureGrid, decodeFmap, encodeFmap } from './fmap.js';
export { Tensor, WeightBundle, decodeWeights, encodeWeights, loadWeights } from './weights.js';
export { Chw, chwToHwc, conv2d, batchNorm, maxPool2d, relu, zeros } from './ops.js';
export { BACKBONES, BACKBONE_CONTRACT, Backbone, runBackbone, vgg19TwoConvs, wrn50Block2 } from './models.js';
export { loadPng, normalizeImagenet, resizeBilinear } from './image.js';
export { ExportSpec, collectInputs, exportAll, exportOne } from './export.js';
