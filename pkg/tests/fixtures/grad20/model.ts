class Layer {
  size: number;

  grow(step: number): number {
    return this.size + step;
  }
}

function makeLayer(layerSize: number): Layer {
  let layer: Layer = new Layer();
  layer.size = layerSize;
  let ready: boolean = layerSize > 0;
  return layer;
}
