/** Marker view-model: which agents show on the map and how they are styled.
 *
 * Only placed agents (those with coordinates) become markers. At most one
 * marker is selected at a time; selecting one deselects the rest, and the
 * selected marker always renders in the theme's red.
 */

import { MARKER_COLORS } from "./theme.js";
import type { AgentSummary } from "./types.js";

export interface UiAgentMarker {
  agent: AgentSummary;
  selected: boolean;
  color: string;
  shape: "dot" | "rect";
}

export function markerColor(agent: AgentSummary, selected: boolean): string {
  if (selected) return MARKER_COLORS.selected;
  if (agent.flags?.dropped_out) return MARKER_COLORS.studentDropout;
  if (agent.roles.includes("student")) return MARKER_COLORS.student;
  if (agent.kind === "person") return MARKER_COLORS.person;
  if (agent.roles.includes("school")) return MARKER_COLORS.school;
  if (agent.roles.includes("residence")) return MARKER_COLORS.residence;
  if (agent.kind === "building") return MARKER_COLORS.building;
  return MARKER_COLORS.twinner;
}

export class MarkerLayer {
  private agents: AgentSummary[] = [];
  private selectedId: number | null = null;

  /** Replace the agent list (e.g. after a refresh); selection survives if
   * the selected agent is still present. */
  setAgents(agents: AgentSummary[]): void {
    this.agents = agents.filter((a) => a.lat !== undefined && a.lon !== undefined);
    if (this.selectedId !== null && !this.agents.some((a) => a.id === this.selectedId)) {
      this.selectedId = null;
    }
  }

  select(agentId: number | null): void {
    if (agentId === null) {
      this.selectedId = null;
      return;
    }
    if (this.agents.some((a) => a.id === agentId)) {
      this.selectedId = agentId;
    }
  }

  selected(): AgentSummary | null {
    return this.agents.find((a) => a.id === this.selectedId) ?? null;
  }

  markers(): UiAgentMarker[] {
    return this.agents.map((agent) => {
      const selected = agent.id === this.selectedId;
      return {
        agent,
        selected,
        color: markerColor(agent, selected),
        shape: agent.kind === "building" ? "rect" : "dot",
      };
    });
  }
}
