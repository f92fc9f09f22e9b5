/** SVG map panel: a plain coordinate basemap with one marker per placed agent. */

import { MarkerLayer } from "./markers.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const WIDTH = 800;
const HEIGHT = 600;
const PADDING = 24;

export class MapPanel {
  private svg: SVGSVGElement;

  constructor(
    private container: HTMLElement,
    private layer: MarkerLayer,
    private onSelect: (agentId: number) => void,
  ) {
    this.svg = document.createElementNS(SVG_NS, "svg");
    this.svg.setAttribute("viewBox", `0 0 ${WIDTH} ${HEIGHT}`);
    this.svg.classList.add("map-svg");
    this.container.appendChild(this.svg);
  }

  /** Fit all markers into the view; lat grows upward, lon rightward. */
  private projector(): (lat: number, lon: number) => [number, number] {
    const markers = this.layer.markers();
    const lats = markers.map((m) => m.agent.lat!);
    const lons = markers.map((m) => m.agent.lon!);
    const latMin = Math.min(...lats);
    const latMax = Math.max(...lats);
    const lonMin = Math.min(...lons);
    const lonMax = Math.max(...lons);
    const latSpan = Math.max(latMax - latMin, 1e-6);
    const lonSpan = Math.max(lonMax - lonMin, 1e-6);
    return (lat, lon) => [
      PADDING + ((lon - lonMin) / lonSpan) * (WIDTH - 2 * PADDING),
      HEIGHT - PADDING - ((lat - latMin) / latSpan) * (HEIGHT - 2 * PADDING),
    ];
  }

  render(): void {
    this.svg.replaceChildren();
    const markers = this.layer.markers();
    if (markers.length === 0) return;
    const project = this.projector();
    for (const marker of markers) {
      const [x, y] = project(marker.agent.lat!, marker.agent.lon!);
      const size = marker.selected ? 7 : 4;
      let shape: SVGElement;
      if (marker.shape === "rect") {
        shape = document.createElementNS(SVG_NS, "rect");
        shape.setAttribute("x", String(x - size));
        shape.setAttribute("y", String(y - size));
        shape.setAttribute("width", String(2 * size));
        shape.setAttribute("height", String(2 * size));
      } else {
        shape = document.createElementNS(SVG_NS, "circle");
        shape.setAttribute("cx", String(x));
        shape.setAttribute("cy", String(y));
        shape.setAttribute("r", String(size));
      }
      shape.setAttribute("fill", marker.color);
      shape.classList.add("marker");
      if (marker.selected) shape.classList.add("selected");
      shape.addEventListener("click", () => this.onSelect(marker.agent.id));
      const title = document.createElementNS(SVG_NS, "title");
      title.textContent = `${marker.agent.name} (#${marker.agent.id})`;
      shape.appendChild(title);
      this.svg.appendChild(shape);
    }
  }
}
