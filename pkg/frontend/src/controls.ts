/** Step controls and the metrics strip.
 *
 * A step posts to the simulation, then refreshes metrics and asks the host
 * to re-fetch agents (dropout flags recolor markers). Further steps are
 * refused while one is pending.
 */

import { ApiClient } from "./api.js";
import type { MetricsReport, StepResult } from "./types.js";

export class SimControls {
  day = 0;
  metrics: MetricsReport | null = null;
  busy = false;

  constructor(
    private api: ApiClient,
    private refreshAgents: () => Promise<void>,
  ) {}

  async step(days = 1): Promise<StepResult | null> {
    if (this.busy) return null;
    this.busy = true;
    try {
      const result = await this.api.step(days);
      this.day = result.day;
      this.metrics = await this.api.metrics();
      await this.refreshAgents();
      return result;
    } finally {
      this.busy = false;
    }
  }

  async refreshMetrics(): Promise<MetricsReport> {
    this.metrics = await this.api.metrics();
    this.day = this.metrics.day;
    return this.metrics;
  }
}
