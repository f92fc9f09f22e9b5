/** Per-agent chat transcripts, cached client-side.
 *
 * Each agent keeps its own transcript for the whole session, so switching
 * the selection away and back restores the dialogue. Entries stay in append
 * order; replies carry the server's turn index so ordering is checkable.
 */

import { TRANSCRIPT_COLORS, USER_LABEL } from "./theme.js";

export interface UiTranscriptEntry {
  label: string;
  text: string;
  colorRole: "user" | "agent" | "error";
  color: string;
  turnIndex?: number;
}

export class TranscriptStore {
  private byAgent = new Map<number, UiTranscriptEntry[]>();

  entriesFor(agentId: number): UiTranscriptEntry[] {
    return this.byAgent.get(agentId) ?? [];
  }

  private push(agentId: number, entry: UiTranscriptEntry): UiTranscriptEntry {
    const entries = this.byAgent.get(agentId);
    if (entries) {
      entries.push(entry);
    } else {
      this.byAgent.set(agentId, [entry]);
    }
    return entry;
  }

  appendUser(agentId: number, text: string): UiTranscriptEntry {
    return this.push(agentId, {
      label: USER_LABEL,
      text,
      colorRole: "user",
      color: TRANSCRIPT_COLORS.user,
    });
  }

  appendAgent(agentId: number, agentName: string, text: string, turnIndex: number): UiTranscriptEntry {
    return this.push(agentId, {
      label: agentName,
      text,
      colorRole: "agent",
      color: TRANSCRIPT_COLORS.agent,
      turnIndex,
    });
  }

  appendError(agentId: number, text: string): UiTranscriptEntry {
    return this.push(agentId, {
      label: "error",
      text,
      colorRole: "error",
      color: TRANSCRIPT_COLORS.error,
    });
  }
}
