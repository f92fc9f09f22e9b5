/** Chat controller: one in-flight request per agent, errors become
 * inline transcript rows instead of breaking the panel. */

import { ApiClient, ApiError } from "./api.js";
import { TranscriptStore } from "./transcripts.js";

export class ChatController {
  private pending = new Set<number>();

  constructor(
    private api: ApiClient,
    readonly transcripts: TranscriptStore,
  ) {}

  /** The send button is enabled only with a selection and non-blank text. */
  canSend(agentId: number | null, text: string): boolean {
    return agentId !== null && text.trim().length > 0 && !this.pending.has(agentId);
  }

  async send(agentId: number, agentName: string, text: string): Promise<void> {
    if (!this.canSend(agentId, text)) return;
    this.pending.add(agentId);
    this.transcripts.appendUser(agentId, text);
    try {
      const reply = await this.api.chat(agentId, text);
      this.transcripts.appendAgent(agentId, agentName, reply.reply, reply.turn_index);
    } catch (err) {
      const message = err instanceof ApiError ? `${err.error}: ${err.detail}` : String(err);
      this.transcripts.appendError(agentId, message);
    } finally {
      this.pending.delete(agentId);
    }
  }
}
