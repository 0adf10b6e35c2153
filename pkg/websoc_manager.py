import logging
import uuid
from typing import Dict

from fastapi import WebSocket, WebSocketDisconnect

from constants import SNP_DEFAULT_HORIZON
from snp.document import parse_system
from snp.errors import SNPError
from snp.simulator import ArrivalTally, iterate

logger = logging.getLogger(__name__)


class ConnectionManager:
    def __init__(self):
        self.active_connections: Dict[str, WebSocket] = {}

    async def connect(self, websocket: WebSocket) -> str:
        await websocket.accept()
        client_id = str(uuid.uuid4())
        self.active_connections[client_id] = websocket
        return client_id

    def disconnect(self, client_id: str):
        self.active_connections.pop(client_id, None)

    async def send(self, message: dict, client_id: str):
        ws = self.active_connections.get(client_id)
        if ws:
            await ws.send_json(message)


manager = ConnectionManager()


async def stream_simulation(client_id: str, request: dict):
    """One message per trace record, one per configuration when verbose, then the sink summary."""
    try:
        system = parse_system(request.get("document", ""), request.get("parameters") or {})
        horizon = request.get("horizon") or SNP_DEFAULT_HORIZON
        verbose = bool(request.get("verbose"))
        tally = ArrivalTally(system.sinks)
        halted, clock = False, 0
        for config, events, halted in iterate(system, horizon):
            clock = config.clock
            for event in events:
                await manager.send({"type": "event", "data": event.record()}, client_id)
            tally.add(events)
            if verbose:
                await manager.send({"type": "config", "data": config.line()}, client_id)
    except SNPError as exc:
        await manager.send({"type": "error", "error": str(exc)}, client_id)
        return
    await manager.send({
        "type": "summary",
        "data": {"system": system.name, "halted": halted, "steps": clock, "lost_spikes": tally.lost,
                 **tally.record().to_dict()},
    }, client_id)


async def websocket_endpoint(websocket: WebSocket):
    client_id = await manager.connect(websocket)
    try:
        while True:
            request = await websocket.receive_json()
            logger.debug("simulation request from %s", client_id)
            await stream_simulation(client_id, request)
    except WebSocketDisconnect:
        manager.disconnect(client_id)
