/** Tiny SVG document builder: enough for line charts with error bars. */

export interface Attrs {
  [key: string]: string | number;
}

function attrString(attrs: Attrs): string {
  return Object.entries(attrs)
    .map(([k, v]) => `${k}="${String(v)}"`)
    .join(' ');
}

export class SvgDoc {
  readonly width: number;
  readonly height: number;
  private parts: string[] = [];

  constructor(width: number, height: number) {
    this.width = width;
    this.height = height;
  }

  element(tag: string, attrs: Attrs, text?: string): void {
    if (text !== undefined) {
      this.parts.push(`<${tag} ${attrString(attrs)}>${escapeText(text)}</${tag}>`);
    } else {
      this.parts.push(`<${tag} ${attrString(attrs)}/>`);
    }
  }

  line(x1: number, y1: number, x2: number, y2: number, attrs: Attrs = {}): void {
    this.element('line', { x1: r2(x1), y1: r2(y1), x2: r2(x2), y2: r2(y2), stroke: '#222', 'stroke-width': 1, ...attrs });
  }

  path(points: [number, number][], attrs: Attrs = {}): void {
    if (points.length === 0) return;
    const d = points.map(([x, y], i) => `${i === 0 ? 'M' : 'L'}${r2(x)} ${r2(y)}`).join(' ');
    this.element('path', { d, fill: 'none', stroke: '#1f77b4', 'stroke-width': 1.5, ...attrs });
  }

  circle(cx: number, cy: number, rad: number, attrs: Attrs = {}): void {
    this.element('circle', { cx: r2(cx), cy: r2(cy), r: rad, ...attrs });
  }

  text(x: number, y: number, content: string, attrs: Attrs = {}): void {
    this.element('text', { x: r2(x), y: r2(y), 'font-family': 'sans-serif', 'font-size': 11, fill: '#111', ...attrs }, content);
  }

  render(): string {
    return [
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" height="${this.height}" viewBox="0 0 ${this.width} ${this.height}">`,
      `<rect width="${this.width}" height="${this.height}" fill="white"/>`,
      ...this.parts,
      '</svg>',
    ].join('\n');
  }
}

function r2(v: number): number {
  return Math.round(v * 100) / 100;
}

function escapeText(s: string): string {
  return s.replace(/&/g, '&amp;').replace(/</g, '&lt;').replace(/>/g, '&gt;');
}

export const SERIES_COLORS = ['#1f77b4', '#d62728', '#2ca02c', '#9467bd', '#ff7f0e', '#8c564b', '#17becf', '#7f7f7f'];
