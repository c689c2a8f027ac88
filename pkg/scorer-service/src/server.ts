/** Entry point: load config from the environment and serve. */

import { createApp } from "./app.js";
import { configFromEnv } from "./config.js";

const config = configFromEnv();
const app = createApp(config);
app.listen(config.port, () => {
  console.log(
    `scorer-service listening on :${config.port} ` +
      `(model ${config.modelId}, max context ${config.maxContextLength} tokens)`,
  );
});
