/**
 * Connection to the control service over its WebSocket bridge.
 *
 * The transport is injectable so tests can drive the console from a
 * mock service; the browser implementation wraps a WebSocket.  On any
 * drop the session stops sending and the state shows disconnected.
 */

import { Store } from "./state.js";

export interface Transport {
  send(line: string): void;
  close(): void;
  onLine(handler: (line: string) => void): void;
  onOpen(handler: () => void): void;
  onClose(handler: () => void): void;
}

export class WebSocketTransport implements Transport {
  private socket: WebSocket;
  private lineHandler: (line: string) => void = () => {};
  private openHandler: () => void = () => {};
  private closeHandler: () => void = () => {};

  constructor(endpoint: string) {
    this.socket = new WebSocket(endpoint);
    this.socket.onopen = () => this.openHandler();
    this.socket.onclose = () => this.closeHandler();
    this.socket.onerror = () => this.closeHandler();
    this.socket.onmessage = (event) => {
      for (const line of String(event.data).split("\n")) {
        if (line.trim().length > 0) this.lineHandler(line.trim());
      }
    };
  }

  send(line: string): void {
    if (this.socket.readyState === WebSocket.OPEN) this.socket.send(line);
  }

  close(): void {
    this.socket.close();
  }

  onLine(handler: (line: string) => void): void {
    this.lineHandler = handler;
  }

  onOpen(handler: () => void): void {
    this.openHandler = handler;
  }

  onClose(handler: () => void): void {
    this.closeHandler = handler;
  }
}

export type TransportFactory = (endpoint: string) => Transport;

export class ConsoleSession {
  private transport: Transport | null = null;
  readonly store: Store;
  private factory: TransportFactory;
  telemetryDivisor = 1;

  constructor(store: Store, factory: TransportFactory = (e) => new WebSocketTransport(e)) {
    this.store = store;
    this.factory = factory;
  }

  connect(endpoint: string): void {
    this.disconnect();
    this.store.markConnecting(endpoint);
    const transport = this.factory(endpoint);
    this.transport = transport;
    transport.onOpen(() => {
      this.store.markConnected(endpoint);
      transport.send(`SUBSCRIBE DIV=${this.telemetryDivisor}`);
      transport.send("PING");
    });
    transport.onLine((line) => this.store.ingestLine(line));
    transport.onClose(() => {
      if (this.transport === transport) {
        this.transport = null;
        this.store.markDisconnected("connection lost");
      }
    });
  }

  disconnect(): void {
    if (this.transport !== null) {
      const transport = this.transport;
      this.transport = null;
      transport.close();
      this.store.markDisconnected();
    }
  }

  get connected(): boolean {
    return this.transport !== null && this.store.get().connection === "connected";
  }

  /** Send a raw line; silently a no-op while disconnected. */
  send(line: string): boolean {
    if (!this.connected || this.transport === null) return false;
    this.transport.send(line);
    return true;
  }
}
