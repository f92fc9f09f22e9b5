/** Payload shapes of the twinner REST API. */

export interface AgentSummary {
  id: number;
  name: string;
  kind: "person" | "building" | "twinner";
  roles: string[];
  lat?: number;
  lon?: number;
  flags?: { is_rural: boolean; dropped_out: boolean };
}

export interface GroupCounts {
  students: number;
  dropouts: number;
}

export interface MetricsReport {
  day: number;
  students_total: number;
  dropouts_total: number;
  dropout_rate: number;
  by_school: Record<string, GroupCounts>;
  by_area: Record<string, GroupCounts>;
}

export interface StepResult {
  day: number;
  new_events: number;
  dropouts_total: number;
}

export interface ChatReply {
  reply: string;
  turn_index: number;
}

export interface ScenarioCounts {
  agents: number;
  students: number;
  schools: number;
}
