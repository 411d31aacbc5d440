#!/usr/bin/env python3
"""
Scenario Server
HTTP access to presets, scenario runs and snapshot classification
"""

import logging
from datetime import datetime
from typing import Any, Dict, Optional

import uvicorn
from fastapi import FastAPI, HTTPException
from fastapi.concurrency import run_in_threadpool
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from experiments.base_experiment import ScenarioError
from experiments.runner import ExperimentRunner, ScenarioConfig

logging.basicConfig(level=logging.INFO)


class ScenarioRequest(BaseModel):
    name: str
    arguments: Dict[str, Any] = Field(default_factory=dict)


class ClassifyRequest(BaseModel):
    snapshot: str


class ScenarioServer:
    """FastAPI front end of an ExperimentRunner; scenarios run in the worker thread pool"""

    def __init__(self, runner: Optional[ExperimentRunner] = None, host: str = "0.0.0.0", port: int = 4000):
        self.runner = runner or ExperimentRunner()
        self.host = host
        self.port = port
        self.logger = logging.getLogger("swarm-scenario-server")

        self.app = FastAPI(title="Surprise Swarm Scenario Server", version="1.0.0")
        self.app.add_middleware(
            CORSMiddleware,
            allow_origins=["*"],
            allow_credentials=True,
            allow_methods=["*"],
            allow_headers=["*"],
        )
        self._setup_routes()

    def _setup_routes(self):

        @self.app.get("/scenarios")
        async def list_scenarios():
            """Scenarios, presets, damage areas and the ScenarioConfig schema"""
            return {
                "scenarios": self.runner.scenarios,
                "presets": self.runner.manager.list_presets(),
                "areas": self.runner.manager.list_areas(),
                "schema": ScenarioConfig.model_json_schema(),
            }

        @self.app.post("/scenarios/run")
        async def run_scenario(request: ScenarioRequest):
            """Run a scenario and return its summary"""
            try:
                result = await run_in_threadpool(self.runner.execute_scenario, request.name, request.arguments)
            except ScenarioError as e:
                self.logger.error(f"❌ Scenario call error: {e}")
                status = 400 if e.is_invalid_input else 500
                raise HTTPException(status_code=status, detail=str(e))
            return {"scenario": request.name, "result": result}

        @self.app.post("/classify")
        async def classify(request: ClassifyRequest):
            """Classify an ASCII snapshot"""
            try:
                return await run_in_threadpool(self.runner.execute_scenario, "classify", {"text": request.snapshot})
            except ScenarioError as e:
                raise HTTPException(status_code=400 if e.is_invalid_input else 500, detail=str(e))

        @self.app.get("/health")
        async def health_check():
            return {
                "status": "healthy",
                "service": "swarm-scenario-server",
                "timestamp": datetime.now().isoformat(),
            }

    def start_server(self):
        self.logger.info("🚀 Starting Surprise Swarm Scenario Server...")
        self.logger.info(f"📡 Server will run on http://{self.host}:{self.port}")
        self.logger.info("🔧 Endpoints:")
        self.logger.info("   - GET  /scenarios - List scenarios, presets and damage areas")
        self.logger.info("   - POST /scenarios/run - Run a scenario")
        self.logger.info("   - POST /classify - Classify an ASCII snapshot")
        self.logger.info("   - GET  /health - Health check")
        self.logger.info("🛠️ Available scenarios:")
        for desc in self.runner.describe():
            self.logger.info(f"   - {desc}")
        self.logger.info("=" * 60)

        uvicorn.run(self.app, host=self.host, port=self.port)


def create_app(runner: Optional[ExperimentRunner] = None) -> FastAPI:
    return ScenarioServer(runner).app
