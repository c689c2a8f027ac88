/** Service configuration with validation and environment loading. */

export interface ServiceConfig {
  modelId: string;
  device: "cpu";
  maxContextLength: number;
  port: number;
}

export const DEFAULT_CONFIG: ServiceConfig = {
  modelId: "count-lm/teacher-forced/v1",
  device: "cpu",
  maxContextLength: 4096,
  port: 8400,
};

export class ConfigError extends Error {}

export function validateConfig(config: ServiceConfig): ServiceConfig {
  if (!config.modelId) {
    throw new ConfigError("modelId must be non-empty");
  }
  if (config.device !== "cpu") {
    throw new ConfigError(`unsupported device ${JSON.stringify(config.device)}`);
  }
  if (!Number.isInteger(config.maxContextLength) || config.maxContextLength <= 0) {
    throw new ConfigError("maxContextLength must be a positive integer");
  }
  if (!Number.isInteger(config.port) || config.port < 1 || config.port > 65535) {
    throw new ConfigError("port must be in 1..65535");
  }
  return config;
}

export function configFromEnv(env: NodeJS.ProcessEnv = process.env): ServiceConfig {
  const read = (key: string, fallback: number): number =>
    env[key] === undefined ? fallback : Number(env[key]);
  return validateConfig({
    modelId: env.SCORER_MODEL_ID ?? DEFAULT_CONFIG.modelId,
    device: (env.SCORER_DEVICE ?? DEFAULT_CONFIG.device) as ServiceConfig["device"],
    maxContextLength: read("SCORER_MAX_CONTEXT", DEFAULT_CONFIG.maxContextLength),
    port: read("SCORER_PORT", DEFAULT_CONFIG.port),
  });
}
