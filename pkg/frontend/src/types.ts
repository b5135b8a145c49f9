// Wire types shared with the labeling server. Everything here mirrors the
// JSON the server sends and accepts; nothing in this file may ever carry
// screen coordinates.

export type NodeId = number;
export type AnchorId = string;

export interface PictureNodeRecord {
  id: NodeId;
  image: string;
  label?: string;
  shape: "image";
}

export interface AnchorRecord {
  id: AnchorId;
  image: "anchor.png";
  label: string;
  shape: "image";
  group: "anchor";
  members: NodeId[];
}

export interface EdgeRecord {
  to: AnchorId;
  from: NodeId;
}

export interface GraphDocument {
  clusters: AnchorRecord[];
  nodes: PictureNodeRecord[];
  edges: EdgeRecord[];
}

export type MutationKind =
  | "CreateCluster"
  | "RenameNode"
  | "DeleteCluster"
  | "AddMembers"
  | "RemoveMembers"
  | "DeletePictures";

export interface MutationPayload {
  kind: MutationKind;
  selection?: NodeId[];
  anchor?: AnchorId;
  target?: NodeId | AnchorId;
  label?: string;
}

export interface SnapshotMessage {
  type: "snapshot";
  revision: number;
  state: GraphDocument;
}

export interface AppliedMessage {
  type: "applied";
  revision: number;
  mutation: MutationPayload;
}

export interface RejectedMessage {
  type: "rejected";
  revision: number;
  error: { code: string; detail: string; client_seq?: number };
}

export type ServerMessage = SnapshotMessage | AppliedMessage | RejectedMessage;

export interface ClientMessage {
  type: "hello" | "mutate" | "request_snapshot";
  client_seq: number;
  mutation?: MutationPayload;
}

export interface StatsResponse {
  nodes: number;
  clusters: number;
  edges: number;
  unlabeled: number;
  revision: number;
}
