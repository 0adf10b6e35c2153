import logging
from contextlib import asynccontextmanager

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from routers.systems import router as systems_router
from routers.runs import router as runs_router
from websoc_manager import websocket_endpoint
from database.database import init_db

from constants import SNP_LOG_LEVEL, WEB_URL

logging.basicConfig(level=SNP_LOG_LEVEL, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


@asynccontextmanager
async def lifespan(app: FastAPI):
    init_db()
    yield


app = FastAPI(title="SNP delay elimination service", lifespan=lifespan)

app.add_middleware(
    CORSMiddleware,
    allow_origins=[WEB_URL],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

# Register REST routers
app.include_router(systems_router)
app.include_router(runs_router)

# Register WebSocket endpoint
app.add_api_websocket_route("/ws/simulate", websocket_endpoint)

if __name__ == "__main__":
    import uvicorn
    uvicorn.run(app, host="0.0.0.0", port=8000)
