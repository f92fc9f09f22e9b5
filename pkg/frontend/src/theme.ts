/** The one place marker and transcript colors live. */

export const MARKER_COLORS = {
  selected: "#d62728", // the selected agent is highlighted in red
  student: "#1f77b4",
  studentDropout: "#7f0000",
  person: "#2ca02c",
  school: "#ff7f0e",
  residence: "#8c8c8c",
  building: "#bcbd22",
  twinner: "#9467bd",
} as const;

export const TRANSCRIPT_COLORS = {
  user: "#1f4fd7", // "You:" entries render blue
  agent: "#d62728", // agent replies render red under the agent's name
  error: "#b00020",
} as const;

export const USER_LABEL = "You:";
