/** Wires the panels together against the live API. */

import { ApiClient, ApiError } from "./api.js";
import { ChatController } from "./chat.js";
import { SimControls } from "./controls.js";
import { MapPanel } from "./map.js";
import { MarkerLayer } from "./markers.js";
import { TranscriptStore } from "./transcripts.js";

declare global {
  interface Window {
    TWINNER_API_BASE?: string;
    TWINNER_API_TOKEN?: string;
  }
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

export async function boot(): Promise<void> {
  const api = new ApiClient(window.TWINNER_API_BASE ?? "", window.TWINNER_API_TOKEN ?? null);
  const layer = new MarkerLayer();
  const transcripts = new TranscriptStore();
  const chat = new ChatController(api, transcripts);

  const banner = el<HTMLDivElement>("banner");
  const dayCounter = el<HTMLSpanElement>("day-counter");
  const metricsStrip = el<HTMLSpanElement>("metrics-strip");
  const agentTitle = el<HTMLHeadingElement>("agent-title");
  const transcriptBox = el<HTMLDivElement>("transcript");
  const input = el<HTMLInputElement>("chat-input");
  const sendButton = el<HTMLButtonElement>("send");
  const stepButton = el<HTMLButtonElement>("step");
  const stepDays = el<HTMLInputElement>("step-days");

  const showError = (err: unknown) => {
    banner.textContent = err instanceof ApiError ? `${err.error}: ${err.detail}` : String(err);
    banner.hidden = false;
  };
  const clearError = () => {
    banner.hidden = true;
  };

  const map = new MapPanel(el("map"), layer, (agentId) => {
    layer.select(agentId);
    map.render();
    renderChat();
  });

  function renderHeader(controls: SimControls): void {
    dayCounter.textContent = `day ${controls.day}`;
    const m = controls.metrics;
    metricsStrip.textContent = m
      ? `${m.students_total} students, ${m.dropouts_total} dropouts (rate ${m.dropout_rate.toFixed(3)})`
      : "";
  }

  function renderChat(): void {
    const selected = layer.selected();
    agentTitle.textContent = selected ? `${selected.name} (#${selected.id})` : "select an agent";
    transcriptBox.replaceChildren();
    if (!selected) return;
    for (const entry of transcripts.entriesFor(selected.id)) {
      const row = document.createElement("div");
      row.className = `entry ${entry.colorRole}`;
      const label = document.createElement("span");
      label.className = "label";
      label.style.color = entry.color;
      label.textContent = entry.label;
      const text = document.createElement("span");
      text.style.color = entry.color;
      text.textContent = ` ${entry.text}`;
      row.append(label, text);
      transcriptBox.appendChild(row);
    }
    transcriptBox.scrollTop = transcriptBox.scrollHeight;
    sendButton.disabled = !chat.canSend(selected.id, input.value);
  }

  async function refreshAgents(): Promise<void> {
    layer.setAgents(await api.listAgents());
    map.render();
    renderChat();
  }

  const controls = new SimControls(api, refreshAgents);

  stepButton.addEventListener("click", async () => {
    clearError();
    stepButton.disabled = true;
    try {
      await controls.step(Math.max(1, Number(stepDays.value) || 1));
      renderHeader(controls);
    } catch (err) {
      showError(err);
    } finally {
      stepButton.disabled = false;
    }
  });

  input.addEventListener("input", () => {
    const selected = layer.selected();
    sendButton.disabled = !selected || !chat.canSend(selected.id, input.value);
  });

  sendButton.addEventListener("click", async () => {
    const selected = layer.selected();
    if (!selected) return;
    const text = input.value;
    input.value = "";
    await chat.send(selected.id, selected.name, text);
    renderChat();
  });

  try {
    const health = await api.health();
    if (!health.scenario_loaded) {
      banner.textContent = "no scenario loaded yet — POST /api/scenario or start the server with --scenario";
      banner.hidden = false;
    } else {
      await controls.refreshMetrics();
      renderHeader(controls);
    }
    await refreshAgents();
  } catch (err) {
    showError(err);
  }
}

boot();
