// Marching squares over a scalar raster: extracts the level set as line
// segments in raster index space. The server sends raw slice values; all
// contouring happens client-side so the protocol stays render-agnostic.

export interface Segment {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
}

export interface Raster {
  width: number;
  height: number;
  // values[j * width + i], i.e. row-major over rows of constant j
  values: number[] | Float64Array;
}

function lerp(a: number, b: number, level: number): number {
  // position of the crossing on an edge from value a to value b
  const d = b - a;
  if (d === 0) return 0.5;
  return (level - a) / d;
}

export function marchingSquares(raster: Raster, level = 0): Segment[] {
  const { width, height, values } = raster;
  const at = (i: number, j: number) => values[j * width + i] as number;
  const segments: Segment[] = [];

  for (let j = 0; j < height - 1; j++) {
    for (let i = 0; i < width - 1; i++) {
      const v00 = at(i, j); // corner (i, j)
      const v10 = at(i + 1, j);
      const v01 = at(i, j + 1);
      const v11 = at(i + 1, j + 1);
      let caseId = 0;
      if (v00 < level) caseId |= 1;
      if (v10 < level) caseId |= 2;
      if (v11 < level) caseId |= 4;
      if (v01 < level) caseId |= 8;
      if (caseId === 0 || caseId === 15) continue;

      // edge crossing points, in index space
      const bottom = () => ({ x: i + lerp(v00, v10, level), y: j });
      const top = () => ({ x: i + lerp(v01, v11, level), y: j + 1 });
      const left = () => ({ x: i, y: j + lerp(v00, v01, level) });
      const right = () => ({ x: i + 1, y: j + lerp(v10, v11, level) });

      const emit = (p: { x: number; y: number }, q: { x: number; y: number }) =>
        segments.push({ x0: p.x, y0: p.y, x1: q.x, y1: q.y });

      switch (caseId) {
        case 1: case 14: emit(left(), bottom()); break;
        case 2: case 13: emit(bottom(), right()); break;
        case 3: case 12: emit(left(), right()); break;
        case 4: case 11: emit(right(), top()); break;
        case 6: case 9: emit(bottom(), top()); break;
        case 7: case 8: emit(left(), top()); break;
        case 5: case 10: {
          // saddle: disambiguate with the cell-center average
          const center = (v00 + v10 + v01 + v11) / 4;
          const inside = center < level;
          if ((caseId === 5) === inside) {
            emit(left(), bottom());
            emit(right(), top());
          } else {
            emit(left(), top());
            emit(bottom(), right());
          }
          break;
        }
      }
    }
  }
  return segments;
}
