/** Pan/zoom camera mapping world coordinates to screen pixels. */

export class Camera {
  panX: number;
  panY: number;
  zoom: number;

  constructor(panX = 0, panY = 0, zoom = 1) {
    this.panX = panX;
    this.panY = panY;
    this.zoom = zoom;
  }

  worldToScreen(wx: number, wy: number): [number, number] {
    return [wx * this.zoom + this.panX, wy * this.zoom + this.panY];
  }

  screenToWorld(sx: number, sy: number): [number, number] {
    return [(sx - this.panX) / this.zoom, (sy - this.panY) / this.zoom];
  }

  /** Shift the view by a screen-pixel delta. */
  panBy(dx: number, dy: number): void {
    this.panX += dx;
    this.panY += dy;
  }

  /** Scale around a screen anchor so the point under the cursor stays put. */
  zoomAt(sx: number, sy: number, factor: number): void {
    const next = Math.min(20, Math.max(0.05, this.zoom * factor));
    const applied = next / this.zoom;
    this.panX = sx - (sx - this.panX) * applied;
    this.panY = sy - (sy - this.panY) * applied;
    this.zoom = next;
  }

  /** Center the view on a world bounding box with a pixel margin. */
  fit(
    box: { xlo: number; ylo: number; xhi: number; yhi: number },
    width: number,
    height: number,
    margin = 40
  ): void {
    const w = Math.max(box.xhi - box.xlo, 1);
    const h = Math.max(box.yhi - box.ylo, 1);
    this.zoom = Math.min(
      (width - 2 * margin) / w,
      (height - 2 * margin) / h,
      4
    );
    this.panX = width / 2 - ((box.xlo + box.xhi) / 2) * this.zoom;
    this.panY = height / 2 - ((box.ylo + box.yhi) / 2) * this.zoom;
  }
}
