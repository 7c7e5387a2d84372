"""HTTP application implementing the shared wire protocol."""

from __future__ import annotations

import json
from importlib import resources

import jsonschema
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .config import ServiceConfig
from .model import ModelError, load_model

WIRE_LANGUAGE = "ecmascript"


def _load_wire_schema() -> dict:
    # The protocol schema ships with the client package; loading it from
    # there keeps a single source of truth for both sides of the wire.
    text = (
        resources.files("typeflow.data")
        .joinpath("inference_protocol.schema.json")
        .read_text(encoding="utf-8")
    )
    return json.loads(text)


def create_app(config: ServiceConfig | None = None, model=None) -> FastAPI:
    config = config or ServiceConfig()
    if model is None:
        model = load_model(config.model, config.lexicon_path)
    schema = _load_wire_schema()
    request_schema = {"definitions": schema["definitions"], **schema["request"]}
    validator = jsonschema.Draft7Validator(request_schema)

    app = FastAPI(title="typeflow inference service", docs_url=None, redoc_url=None)
    app.state.config = config
    app.state.model = model

    @app.get("/health")
    def health():
        return {
            "status": "ok",
            "model": getattr(model, "name", config.model),
            "batchLimit": config.max_batch_size,
            "inputBudget": config.input_budget,
            "outputBudget": config.output_budget,
            "languages": [WIRE_LANGUAGE],
        }

    @app.post("/infer")
    async def infer(request: Request):
        try:
            body = await request.json()
        except json.JSONDecodeError:
            return JSONResponse({"error": "request body is not JSON"}, status_code=400)
        error = next(iter(validator.iter_errors(body)), None)
        if error is not None:
            return JSONResponse(
                {"error": f"schema violation: {error.message}"}, status_code=400
            )
        items = body["items"]
        if len(items) > config.max_batch_size:
            return JSONResponse(
                {"error": f"batch of {len(items)} exceeds limit {config.max_batch_size}"},
                status_code=413,
            )
        results = []
        for item in items:
            try:
                predictions = model.predict_item(item)
            except Exception as e:  # plug-in failure
                return JSONResponse({"error": f"model failure: {e}"}, status_code=500)
            results.append({"scope": item["scope"], "predictions": predictions})
        return {"results": results}

    return app


def serve(config: ServiceConfig):
    """Run the server until interrupted."""
    import uvicorn

    try:
        app = create_app(config)
    except ModelError as e:
        raise SystemExit(f"error: {e}")
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
